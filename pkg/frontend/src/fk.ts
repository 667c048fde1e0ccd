// Forward kinematics over the motion JSON feature layout: a frame row is the
// root world translation (3) followed by 22 joints x 6 rotation channels (the
// first two rotation-matrix columns, column-major).

import type { MotionJson } from "./protocol";

export type Vec3 = [number, number, number];
export type Mat3 = [number, number, number, number, number, number, number, number, number];

const JOINTS = 22;

function normalize(v: Vec3): Vec3 {
  const n = Math.hypot(v[0], v[1], v[2]);
  if (n < 1e-8) return [1, 0, 0];
  return [v[0] / n, v[1] / n, v[2] / n];
}

function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

function cross(a: Vec3, b: Vec3): Vec3 {
  return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
}

/** Gram-Schmidt recovery of a rotation matrix from one 6-channel block. */
export function rotationFrom6d(block: ArrayLike<number>): Mat3 {
  const c1: Vec3 = [block[0], block[1], block[2]];
  const c2: Vec3 = [block[3], block[4], block[5]];
  const b1 = normalize(c1);
  const proj = dot(b1, c2);
  let r: Vec3 = [c2[0] - proj * b1[0], c2[1] - proj * b1[1], c2[2] - proj * b1[2]];
  if (Math.hypot(r[0], r[1], r[2]) < 1e-8) {
    const fallback: Vec3 = Math.abs(b1[2]) < 0.9 ? [0, 0, 1] : [0, 1, 0];
    const p = dot(b1, fallback);
    r = [fallback[0] - p * b1[0], fallback[1] - p * b1[1], fallback[2] - p * b1[2]];
  }
  const b2 = normalize(r);
  const b3 = cross(b1, b2);
  // column-major storage of [b1 b2 b3] as a row-major Mat3
  return [b1[0], b2[0], b3[0], b1[1], b2[1], b3[1], b1[2], b2[2], b3[2]];
}

function matMul(a: Mat3, b: Mat3): Mat3 {
  const out = new Array(9) as Mat3;
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 3; j++) {
      out[3 * i + j] =
        a[3 * i] * b[j] + a[3 * i + 1] * b[3 + j] + a[3 * i + 2] * b[6 + j];
    }
  }
  return out;
}

function matVec(m: Mat3, v: Vec3): Vec3 {
  return [
    m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
    m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
    m[6] * v[0] + m[7] * v[1] + m[8] * v[2],
  ];
}

/** World joint positions for one frame row. */
export function jointPositions(motion: MotionJson, frameIndex: number): Vec3[] {
  const frame = motion.frames[frameIndex];
  const positions: Vec3[] = new Array(JOINTS);
  const world: Mat3[] = new Array(JOINTS);
  positions[0] = [frame[0], frame[1], frame[2]];
  world[0] = rotationFrom6d(frame.slice(3, 9));
  for (let j = 1; j < JOINTS; j++) {
    const parent = motion.parents[j];
    const offset = motion.rest_offsets[j] as Vec3;
    const moved = matVec(world[parent], offset);
    const p = positions[parent];
    positions[j] = [p[0] + moved[0], p[1] + moved[1], p[2] + moved[2]];
    world[j] = matMul(world[parent], rotationFrom6d(frame.slice(3 + 6 * j, 9 + 6 * j)));
  }
  return positions;
}

/** Parent-child bone pairs, skipping the root. */
export function bonePairs(motion: MotionJson): Array<[number, number]> {
  const pairs: Array<[number, number]> = [];
  for (let j = 1; j < motion.parents.length; j++) pairs.push([motion.parents[j], j]);
  return pairs;
}
