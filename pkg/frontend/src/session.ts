// UI session state and the user-action flows. Each flow sends protocol
// envelopes through the client and applies the response to exactly the state
// it owns; an error response raises the banner and mutates nothing else.
// Heavy operations (generate, edit) are gated: one pending at a time.

import { PlaybackController } from "./playback";
import type {
  GalleryItem,
  MotionJson,
  ProtocolClient,
  VariantInfo,
} from "./protocol";
import { ProtocolError } from "./protocol";

export type ConnectionState = "disconnected" | "connecting" | "connected";
export type ExportFormat = "gltf" | "frames" | "motion-json";

export interface VariantView {
  id: string;
  frames: number;
  duration_s: number;
  motion: MotionJson | null; // filled by the follow-up fetch, drives the thumbnail
}

export interface DownloadFile {
  filename: string;
  mimeType: string;
  content: string; // text content or base64 (see isBase64)
  isBase64: boolean;
}

export const AVATAR_STYLES = ["capsule", "block", "orb"] as const;

export class UiSession {
  connection: ConnectionState = "disconnected";
  selectedId: string | null = null;
  selectedMotion: MotionJson | null = null;
  gallery: GalleryItem[] = [];
  gallerySelection: string[] = []; // click order, capped at two for blending
  variants: VariantView[] = [];
  errorBanner: string | null = null;
  pendingHeavy: string | null = null; // the user action owning the in-flight heavy request

  readonly playback = new PlaybackController();
  showMesh = true;
  showSkeleton = true;
  avatarStyle: (typeof AVATAR_STYLES)[number] = "capsule";

  constructor(private readonly client: ProtocolClient) {}

  private fail(err: unknown): void {
    this.errorBanner = err instanceof ProtocolError ? err.message : String(err);
  }

  clearError(): void {
    this.errorBanner = null;
  }

  get busy(): boolean {
    return this.pendingHeavy !== null;
  }

  // -- generation -----------------------------------------------------------

  /** Send a generate request and render the returned variants as thumbnails. */
  async generate(prompt: string, durationS: number): Promise<boolean> {
    if (this.busy) return false;
    this.pendingHeavy = "generate";
    try {
      const payload = await this.client.request("generate", {
        prompt,
        duration_s: durationS,
      });
      const variants = payload.variants as VariantInfo[];
      this.variants = variants.map((v) => ({ ...v, motion: null }));
      await Promise.all(
        this.variants.map(async (variant) => {
          const got = await this.client.request("get_sequence", {
            id: variant.id,
            include_motion: true,
          });
          variant.motion = got.motion as MotionJson;
        }),
      );
      return true;
    } catch (err) {
      this.fail(err);
      return false;
    } finally {
      this.pendingHeavy = null;
    }
  }

  /** Load one sequence into the 3D playback area. */
  async select(id: string): Promise<boolean> {
    try {
      const cached = this.variants.find((v) => v.id === id && v.motion);
      const motion =
        cached?.motion ??
        ((await this.client.request("get_sequence", { id, include_motion: true }))
          .motion as MotionJson);
      this.selectedId = id;
      this.selectedMotion = motion;
      this.playback.load(motion.frames.length);
      return true;
    } catch (err) {
      this.fail(err);
      return false;
    }
  }

  // -- editing ----------------------------------------------------------------

  private async edit(baseId: string, edit: Record<string, unknown>): Promise<boolean> {
    if (this.busy) return false;
    this.pendingHeavy = "edit";
    try {
      const payload = await this.client.request("edit", { base_id: baseId, edit });
      this.pendingHeavy = null;
      return await this.select(payload.id as string);
    } catch (err) {
      this.fail(err);
      return false;
    } finally {
      this.pendingHeavy = null;
    }
  }

  /** Extension length in seconds, up to 5. */
  extendSelected(seconds: number): Promise<boolean> {
    if (!this.selectedId) return Promise.resolve(false);
    return this.edit(this.selectedId, { kind: "extend", seconds });
  }

  styleSelected(name: string): Promise<boolean> {
    if (!this.selectedId) return Promise.resolve(false);
    return this.edit(this.selectedId, { kind: "style", name });
  }

  partialBodyEdit(part: string, prompt: string): Promise<boolean> {
    if (!this.selectedId) return Promise.resolve(false);
    return this.edit(this.selectedId, { kind: "partial_body", part, prompt });
  }

  // -- gallery -----------------------------------------------------------------

  async refreshGallery(): Promise<void> {
    try {
      const payload = await this.client.request("list_gallery", {});
      this.gallery = payload.items as GalleryItem[];
      this.gallerySelection = this.gallerySelection.filter((id) =>
        this.gallery.some((item) => item.id === id),
      );
    } catch (err) {
      this.fail(err);
    }
  }

  async addSelectedToGallery(): Promise<boolean> {
    if (!this.selectedId) return false;
    try {
      await this.client.request("add_to_gallery", { id: this.selectedId });
      await this.refreshGallery();
      return true;
    } catch (err) {
      this.fail(err);
      return false;
    }
  }

  /** Toggle a gallery item's blend selection; keeps click order, max two. */
  toggleGallerySelection(id: string): void {
    const at = this.gallerySelection.indexOf(id);
    if (at >= 0) {
      this.gallerySelection.splice(at, 1);
    } else if (this.gallerySelection.length < 2) {
      this.gallerySelection.push(id);
    }
  }

  get canBlend(): boolean {
    return this.gallerySelection.length === 2 && !this.busy;
  }

  /** Blend the two selected gallery items, in selection order. */
  blendSelected(): Promise<boolean> {
    if (this.gallerySelection.length !== 2) return Promise.resolve(false);
    const [base, other] = this.gallerySelection;
    return this.edit(base, { kind: "blend", other_id: other });
  }

  // -- import / download ----------------------------------------------------------

  async importPose(doc: MotionJson, source = "pose file"): Promise<boolean> {
    try {
      const payload = await this.client.request("import_pose", {
        motion_json: doc,
        source,
      });
      return await this.select(payload.id as string);
    } catch (err) {
      this.fail(err);
      return false;
    }
  }

  async download(id: string, format: ExportFormat): Promise<DownloadFile | null> {
    try {
      const params: Record<string, unknown> = { id, format };
      const payload = await this.client.request("export", params);
      if (format === "gltf") {
        return {
          filename: payload.filename as string,
          mimeType: "model/gltf+json",
          content: payload.gltf_base64 as string,
          isBase64: true,
        };
      }
      if (format === "motion-json") {
        return {
          filename: payload.filename as string,
          mimeType: "application/json",
          content: JSON.stringify(payload.motion),
          isBase64: false,
        };
      }
      return {
        filename: `${id}.frames.json`,
        mimeType: "application/json",
        content: JSON.stringify(payload),
        isBase64: false,
      };
    } catch (err) {
      this.fail(err);
      return null;
    }
  }
}
