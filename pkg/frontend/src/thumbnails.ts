// First-frame 2D skeleton thumbnails: an orthographic front view of the pose,
// produced as plain line-segment data so tests can check it without a canvas.

import { bonePairs, jointPositions } from "./fk";
import type { MotionJson } from "./protocol";

export interface ThumbnailSegment {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export const THUMB_SIZE = 96;
const SCALE = 24; // pixels per meter at thumbnail size
const CENTER_Y = 0.0; // world height centered in the tile

export function thumbnailSegments(motion: MotionJson): ThumbnailSegment[] {
  const positions = jointPositions(motion, 0);
  const rootX = positions[0][0];
  const toPx = (x: number, y: number): [number, number] => [
    THUMB_SIZE / 2 + SCALE * (x - rootX),
    THUMB_SIZE / 2 - SCALE * (y - CENTER_Y),
  ];
  return bonePairs(motion).map(([parent, child]) => {
    const [x1, y1] = toPx(positions[parent][0], positions[parent][1]);
    const [x2, y2] = toPx(positions[child][0], positions[child][1]);
    return { x1, y1, x2, y2 };
  });
}

export function drawThumbnail(canvas: HTMLCanvasElement, motion: MotionJson): void {
  canvas.width = THUMB_SIZE;
  canvas.height = THUMB_SIZE;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.fillStyle = "#16161a";
  ctx.fillRect(0, 0, THUMB_SIZE, THUMB_SIZE);
  ctx.strokeStyle = "#e8e8ef";
  ctx.lineWidth = 2;
  for (const seg of thumbnailSegments(motion)) {
    ctx.beginPath();
    ctx.moveTo(seg.x1, seg.y1);
    ctx.lineTo(seg.x2, seg.y2);
    ctx.stroke();
  }
}
