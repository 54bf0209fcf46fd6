/** three.js scene: the reduced arm chain as stylized capsules, candidate
 * spheres bound to the selection state, and per-condition camera placement.
 *
 * The simulator's frame is z-up / y-forward; three.js is y-up, so served
 * positions (x, y, z) are mapped to scene (x, z, -y).
 */

import * as THREE from "three";

import type { ClipPayload, Vec3 } from "./protocol.js";
import { SPHERE_RADIUS, SelectionState } from "./selection.js";
import type { Ray } from "./selection.js";

export const LINK_RADIUS = 0.035;

export function toScene(p: Vec3): THREE.Vector3 {
  return new THREE.Vector3(p[0], p[2], -p[1]);
}

export function fromScene(v: THREE.Vector3): Vec3 {
  return [v.x, -v.z, v.y];
}

export interface CameraPlacement {
  position: Vec3;
  lookAt: Vec3;
}

/** Viewer placement relative to the avatar root (simulator frame).
 *
 * "across": the viewer faces the avatar from the front, slightly above the
 * workspace. "side-by-side": the viewer stands by the avatar's shoulder and
 * shares its view direction. Distances are client configuration defaults,
 * not measured quantities.
 */
export function cameraPlacement(condition: "across" | "side-by-side",
                                root: Vec3 = [0, 0, 0]): CameraPlacement {
  if (condition === "across") {
    return {
      position: [root[0], root[1] + 2.2, root[2] + 0.9],
      lookAt: [root[0], root[1], root[2] + 0.3],
    };
  }
  return {
    position: [root[0] - 0.5, root[1] - 0.3, root[2] + 0.75],
    lookAt: [root[0], root[1] + 1.5, root[2] + 0.3],
  };
}

export class StudyScene {
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  private links: THREE.Mesh[] = [];
  private bones: THREE.Mesh[] = [];
  private spheres: THREE.Mesh[] = [];
  private clip: ClipPayload | null = null;

  constructor(aspect: number) {
    this.camera = new THREE.PerspectiveCamera(60, aspect, 0.05, 50);
    this.scene.background = new THREE.Color("#20242a");
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(2, 4, 1);
    this.scene.add(sun);
    const floor = new THREE.Mesh(
      new THREE.CircleGeometry(4, 48).rotateX(-Math.PI / 2),
      new THREE.MeshStandardMaterial({ color: "#3a4048" }));
    floor.position.y = -0.02;
    this.scene.add(floor);
  }

  loadTrial(clip: ClipPayload, condition: "across" | "side-by-side",
            selection: SelectionState | null): void {
    this.clearTrial();
    this.clip = clip;
    const n = clip.link_names.length;
    const jointGeo = new THREE.SphereGeometry(LINK_RADIUS * 1.2, 16, 12);
    const boneGeo = new THREE.CapsuleGeometry(LINK_RADIUS, 1.0, 4, 12);
    const fleshMat = new THREE.MeshStandardMaterial({ color: "#d8b08c" });
    for (let i = 0; i < n; i++) {
      const joint = new THREE.Mesh(jointGeo, fleshMat);
      this.links.push(joint);
      this.scene.add(joint);
      if (i > 0) {
        const bone = new THREE.Mesh(boneGeo, fleshMat);
        this.bones.push(bone);
        this.scene.add(bone);
      }
    }
    if (selection !== null) {
      for (const center of selection.spheres) {
        const mesh = new THREE.Mesh(
          new THREE.SphereGeometry(SPHERE_RADIUS, 24, 16),
          new THREE.MeshStandardMaterial({ color: selection.sphereColor }));
        mesh.position.copy(toScene(center));
        this.spheres.push(mesh);
        this.scene.add(mesh);
      }
    }
    const placement = cameraPlacement(condition, clip.frames[0][0]);
    this.camera.position.copy(toScene(placement.position));
    this.camera.lookAt(toScene(placement.lookAt));
    this.showFrame(0);
  }

  /** Push frame positions into the link/bone meshes; bones stretch between
   * consecutive chain positions. */
  showFrame(index: number): void {
    if (this.clip === null) return;
    const frame = this.clip.frames[index];
    frame.forEach((p, i) => this.links[i].position.copy(toScene(p)));
    for (let i = 1; i < frame.length; i++) {
      const a = toScene(frame[i - 1]);
      const b = toScene(frame[i]);
      const bone = this.bones[i - 1];
      bone.position.copy(a.clone().add(b).multiplyScalar(0.5));
      const dir = b.clone().sub(a);
      bone.scale.set(1, Math.max(dir.length(), 1e-6), 1);
      bone.quaternion.setFromUnitVectors(
        new THREE.Vector3(0, 1, 0), dir.normalize());
    }
  }

  /** Re-apply the selection state's mandated color to every sphere. */
  syncSphereColors(selection: SelectionState): void {
    for (const mesh of this.spheres) {
      (mesh.material as THREE.MeshStandardMaterial).color.set(
        selection.sphereColor);
    }
  }

  /** Viewer ray (simulator frame) through normalized device coords. */
  viewerRay(ndcX: number, ndcY: number): Ray {
    const caster = new THREE.Raycaster();
    caster.setFromCamera(new THREE.Vector2(ndcX, ndcY), this.camera);
    return {
      origin: fromScene(caster.ray.origin),
      direction: fromScene(caster.ray.direction),
    };
  }

  private clearTrial(): void {
    for (const mesh of [...this.links, ...this.bones, ...this.spheres]) {
      this.scene.remove(mesh);
    }
    this.links = [];
    this.bones = [];
    this.spheres = [];
  }
}
