// Forward-kinematics sanity: identity pose accumulates rest offsets down each
// chain; root translation shifts every joint; 90-degree z-rotation hand check.

import { describe, expect, it } from "vitest";

import { jointPositions, rotationFrom6d } from "../src/fk";
import { makeMotionDoc } from "./helpers";

describe("forward kinematics", () => {
  it("identity pose accumulates rest offsets along each chain", () => {
    const doc = makeMotionDoc(1);
    const positions = jointPositions(doc, 0);
    for (let j = 0; j < 22; j++) {
      let expected = [0, 0, 0];
      let at = j;
      while (at !== 0) {
        const off = doc.rest_offsets[at];
        expected = [expected[0] + off[0], expected[1] + off[1], expected[2] + off[2]];
        at = doc.parents[at];
      }
      expect(positions[j][0]).toBeCloseTo(expected[0], 10);
      expect(positions[j][1]).toBeCloseTo(expected[1], 10);
      expect(positions[j][2]).toBeCloseTo(expected[2], 10);
    }
  });

  it("root translation shifts every joint equally", () => {
    const doc = makeMotionDoc(1);
    const base = jointPositions(doc, 0);
    doc.frames[0][0] = 1.5;
    doc.frames[0][1] = -0.25;
    doc.frames[0][2] = 0.75;
    const moved = jointPositions(doc, 0);
    for (let j = 0; j < 22; j++) {
      expect(moved[j][0]).toBeCloseTo(base[j][0] + 1.5, 10);
      expect(moved[j][1]).toBeCloseTo(base[j][1] - 0.25, 10);
      expect(moved[j][2]).toBeCloseTo(base[j][2] + 0.75, 10);
    }
  });

  it("a 90-degree z-rotation at the root turns child offsets", () => {
    const doc = makeMotionDoc(1);
    doc.rest_offsets[1] = [0, -0.4, 0];
    // Rz(90): columns (0,1,0) and (-1,0,0)
    doc.frames[0].splice(3, 6, 0, 1, 0, -1, 0, 0);
    const positions = jointPositions(doc, 0);
    expect(positions[1][0]).toBeCloseTo(0.4, 10);
    expect(positions[1][1]).toBeCloseTo(0.0, 10);
    expect(positions[1][2]).toBeCloseTo(0.0, 10);
  });

  it("gram-schmidt recovers orthonormal matrices from noisy blocks", () => {
    const m = rotationFrom6d([0.9, 0.1, 0.02, 0.1, 1.1, -0.05]);
    // columns orthonormal: dot products and norms
    const col = (k: number) => [m[k], m[3 + k], m[6 + k]];
    for (let a = 0; a < 3; a++) {
      for (let b = 0; b < 3; b++) {
        const dot = col(a)[0] * col(b)[0] + col(a)[1] * col(b)[1] + col(a)[2] * col(b)[2];
        expect(dot).toBeCloseTo(a === b ? 1 : 0, 9);
      }
    }
  });

  it("degenerate blocks still produce finite rotations", () => {
    for (const block of [[0, 0, 0, 0, 0, 0], [1, 0, 0, 2, 0, 0], [0, 0, 1, 0, 0, -1]]) {
      const m = rotationFrom6d(block);
      expect(m.every(Number.isFinite)).toBe(true);
    }
  });
});
