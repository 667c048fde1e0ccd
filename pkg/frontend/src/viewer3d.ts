// three.js playback of a skeletal sequence: bone lines plus one of three
// primitive-solid avatar looks, with orbit/zoom/pan camera control.

import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";

import { bonePairs, jointPositions, type Vec3 } from "./fk";
import type { MotionJson } from "./protocol";
import { AVATAR_STYLES } from "./session";

type AvatarStyle = (typeof AVATAR_STYLES)[number];

const BONE_COLOR = 0xe8e8ef;
const AVATAR_COLORS: Record<AvatarStyle, number> = {
  capsule: 0xd98943,
  block: 0x5d8aa8,
  orb: 0x8a5da8,
};

export class Viewer3d {
  private readonly scene = new THREE.Scene();
  private readonly camera: THREE.PerspectiveCamera;
  private readonly renderer: THREE.WebGLRenderer;
  private readonly controls: OrbitControls;
  private skeletonLines: THREE.LineSegments | null = null;
  private avatarGroup: THREE.Group | null = null;
  private motion: MotionJson | null = null;
  private pairs: Array<[number, number]> = [];

  constructor(container: HTMLElement) {
    const width = container.clientWidth || 640;
    const height = container.clientHeight || 480;
    this.camera = new THREE.PerspectiveCamera(45, width / height, 0.01, 100);
    this.camera.position.set(0, 0.4, 3.2);
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setSize(width, height);
    this.renderer.setClearColor(0x101014);
    container.appendChild(this.renderer.domElement);
    this.controls = new OrbitControls(this.camera, this.renderer.domElement);
    this.controls.target.set(0, 0, 0);

    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const key = new THREE.DirectionalLight(0xffffff, 1.2);
    key.position.set(2, 3, 4);
    this.scene.add(key);
    const floor = new THREE.GridHelper(4, 16, 0x333340, 0x22222a);
    floor.position.y = -1.0;
    this.scene.add(floor);
  }

  loadMotion(motion: MotionJson): void {
    this.motion = motion;
    this.pairs = bonePairs(motion);
    if (this.skeletonLines) this.scene.remove(this.skeletonLines);
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute(
      "position",
      new THREE.BufferAttribute(new Float32Array(this.pairs.length * 6), 3),
    );
    this.skeletonLines = new THREE.LineSegments(
      geometry,
      new THREE.LineBasicMaterial({ color: BONE_COLOR }),
    );
    this.scene.add(this.skeletonLines);
    this.showFrame(0, "capsule", true, true);
  }

  private rebuildAvatar(style: AvatarStyle, positions: Vec3[]): void {
    if (this.avatarGroup) this.scene.remove(this.avatarGroup);
    this.avatarGroup = new THREE.Group();
    const material = new THREE.MeshStandardMaterial({ color: AVATAR_COLORS[style] });
    for (const [parent, child] of this.pairs) {
      const a = new THREE.Vector3(...positions[parent]);
      const b = new THREE.Vector3(...positions[child]);
      const length = Math.max(a.distanceTo(b), 1e-3);
      let mesh: THREE.Mesh;
      if (style === "capsule") {
        mesh = new THREE.Mesh(new THREE.CapsuleGeometry(0.025, length, 3, 8), material);
      } else if (style === "block") {
        mesh = new THREE.Mesh(new THREE.BoxGeometry(0.05, length, 0.05), material);
      } else {
        mesh = new THREE.Mesh(new THREE.SphereGeometry(Math.max(length / 2, 0.03), 10, 10), material);
        mesh.scale.set(0.35, 1.0, 0.35);
      }
      mesh.position.copy(a.clone().add(b).multiplyScalar(0.5));
      mesh.quaternion.setFromUnitVectors(
        new THREE.Vector3(0, 1, 0),
        b.clone().sub(a).normalize(),
      );
      this.avatarGroup.add(mesh);
    }
    this.scene.add(this.avatarGroup);
  }

  showFrame(index: number, style: AvatarStyle, showMesh: boolean, showSkeleton: boolean): void {
    if (!this.motion || !this.skeletonLines) return;
    const clamped = Math.min(this.motion.frames.length - 1, Math.max(0, index));
    const positions = jointPositions(this.motion, clamped);
    const attr = this.skeletonLines.geometry.getAttribute("position") as THREE.BufferAttribute;
    this.pairs.forEach(([parent, child], i) => {
      attr.setXYZ(2 * i, ...positions[parent]);
      attr.setXYZ(2 * i + 1, ...positions[child]);
    });
    attr.needsUpdate = true;
    this.skeletonLines.visible = showSkeleton;
    this.rebuildAvatar(style, positions);
    if (this.avatarGroup) this.avatarGroup.visible = showMesh;
  }

  render(): void {
    this.controls.update();
    this.renderer.render(this.scene, this.camera);
  }
}
