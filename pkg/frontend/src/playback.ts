// Playback state: a frame cursor that can never leave [0, frameCount - 1],
// whatever sequence of play/pause/seek/tick arrives. Looping playback.

export const PLAYBACK_FPS = 20;

export class PlaybackController {
  private frameCount = 0;
  private cursorValue = 0;
  private playingFlag = false;
  private fraction = 0; // sub-frame accumulator so small ticks still advance

  get frames(): number {
    return this.frameCount;
  }

  get cursor(): number {
    return this.cursorValue;
  }

  get playing(): boolean {
    return this.playingFlag;
  }

  get loaded(): boolean {
    return this.frameCount > 0;
  }

  load(frameCount: number): void {
    this.frameCount = Math.max(0, Math.floor(frameCount));
    this.cursorValue = 0;
    this.playingFlag = false;
    this.fraction = 0;
  }

  play(): void {
    if (this.frameCount > 0) this.playingFlag = true; // idempotent
  }

  pause(): void {
    this.playingFlag = false; // idempotent
  }

  seek(frame: number): void {
    if (this.frameCount === 0) return;
    const clamped = Math.min(this.frameCount - 1, Math.max(0, Math.floor(frame)));
    this.cursorValue = clamped;
  }

  /** Advance by elapsed seconds while playing; wraps around at the end. */
  tick(dtSeconds: number): void {
    if (!this.playingFlag || this.frameCount === 0 || !(dtSeconds > 0)) return;
    this.fraction += dtSeconds * PLAYBACK_FPS;
    const advance = Math.floor(this.fraction);
    if (advance <= 0) return;
    this.fraction -= advance;
    this.cursorValue = (this.cursorValue + advance) % this.frameCount;
  }
}
