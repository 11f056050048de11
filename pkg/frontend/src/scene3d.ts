/** three.js view of the snapshot stream.
 *
 * Every snapshot object arrives with resolved world transforms, so
 * meshes are placed flat in world space (parentage is shown in the
 * side panel, not re-simulated here). Room proxies render as
 * wireframes; other invisible objects and placeholders are skipped.
 */

import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";
import { PROXY_TAG, SnapshotObject, Vec3 } from "./protocol";

const DEG = Math.PI / 180;

function geometryFor(kind: string): THREE.BufferGeometry {
  switch (kind) {
    case "sphere":
      return new THREE.SphereGeometry(0.5, 24, 16);
    case "cylinder":
      return new THREE.CylinderGeometry(0.5, 0.5, 1, 24);
    case "capsule":
      return new THREE.CapsuleGeometry(0.25, 0.5, 8, 16);
    case "plane":
      return new THREE.BoxGeometry(1, 0.002, 1);
    default:
      return new THREE.BoxGeometry(1, 1, 1);
  }
}

export class SceneView {
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  private renderer: THREE.WebGLRenderer;
  private controls: OrbitControls;
  private meshes = new Map<number, THREE.Mesh>();
  private raycaster = new THREE.Raycaster();
  private pointer = new THREE.Vector2();
  private dragPlane = new THREE.Plane();

  constructor(canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(55, 1, 0.01, 100);
    this.camera.position.set(2.6, 2.2, -2.6);
    this.controls = new OrbitControls(this.camera, canvas);
    this.controls.target.set(0, 0.6, 0.8);
    this.scene.background = new THREE.Color(0x10131a);
    this.scene.add(new THREE.HemisphereLight(0xffffff, 0x404060, 1.1));
    const sun = new THREE.DirectionalLight(0xffffff, 1.4);
    sun.position.set(3, 6, -2);
    this.scene.add(sun);
    this.scene.add(new THREE.GridHelper(8, 16, 0x2a3040, 0x1c2230));
    this.resize();
  }

  set orbitEnabled(enabled: boolean) {
    this.controls.enabled = enabled;
  }

  resize(): void {
    const canvas = this.renderer.domElement;
    const width = canvas.clientWidth || 800;
    const height = canvas.clientHeight || 600;
    this.renderer.setSize(width, height, false);
    this.camera.aspect = width / height;
    this.camera.updateProjectionMatrix();
  }

  /** Reconcile meshes with the interpolated object table. */
  sync(objects: Map<number, SnapshotObject>): void {
    for (const [id, mesh] of this.meshes) {
      if (!objects.has(id)) {
        this.scene.remove(mesh);
        mesh.geometry.dispose();
        (mesh.material as THREE.Material).dispose();
        this.meshes.delete(id);
      }
    }
    for (const [id, obj] of objects) {
      const isProxy = obj.tags.includes(PROXY_TAG);
      if (obj.placeholder || (!obj.visible && !isProxy)) continue;
      if (!obj.geometry || obj.geometry.kind === "prefab") continue;
      let mesh = this.meshes.get(id);
      if (!mesh) {
        const material = isProxy
          ? new THREE.MeshBasicMaterial({ wireframe: true,
                                          color: 0x39c5bb })
          : new THREE.MeshStandardMaterial();
        mesh = new THREE.Mesh(geometryFor(obj.geometry.kind), material);
        mesh.userData.objectName = obj.name;
        mesh.userData.grabbable = obj.grabbable;
        this.scene.add(mesh);
        this.meshes.set(id, mesh);
      }
      mesh.position.set(obj.position[0], obj.position[1], obj.position[2]);
      mesh.scale.set(obj.scale[0], obj.scale[1], obj.scale[2]);
      mesh.rotation.set(obj.orientation[1] * DEG, obj.orientation[0] * DEG,
                        obj.orientation[2] * DEG, "YXZ");
      mesh.userData.grabbable = obj.grabbable;
      if (!isProxy) {
        const material = mesh.material as THREE.MeshStandardMaterial;
        material.color.setRGB(obj.color[0], obj.color[1], obj.color[2]);
        material.transparent = obj.color[3] < 1;
        material.opacity = obj.color[3];
        material.emissive.setHex(obj.grabbable ? 0x153015 : 0x000000);
      }
    }
  }

  render(): void {
    this.controls.update();
    this.renderer.render(this.scene, this.camera);
  }

  /** First grabbable mesh under the pointer, with the hit point. */
  pickGrabbable(clientX: number, clientY: number):
      { name: string; point: Vec3 } | null {
    this.setPointer(clientX, clientY);
    this.raycaster.setFromCamera(this.pointer, this.camera);
    const hits = this.raycaster.intersectObjects(
      [...this.meshes.values()].filter((m) => m.userData.grabbable), false);
    if (!hits.length) return null;
    const hit = hits[0];
    // subsequent moves slide on a camera-facing plane through the grab point
    this.dragPlane.setFromNormalAndCoplanarPoint(
      this.camera.getWorldDirection(new THREE.Vector3()).negate(),
      hit.point);
    return {
      name: String(hit.object.userData.objectName),
      point: [hit.point.x, hit.point.y, hit.point.z],
    };
  }

  /** Project the pointer onto the active drag plane. */
  dragPoint(clientX: number, clientY: number): Vec3 | null {
    this.setPointer(clientX, clientY);
    this.raycaster.setFromCamera(this.pointer, this.camera);
    const point = new THREE.Vector3();
    if (!this.raycaster.ray.intersectPlane(this.dragPlane, point)) {
      return null;
    }
    return [point.x, point.y, point.z];
  }

  private setPointer(clientX: number, clientY: number): void {
    const rect = this.renderer.domElement.getBoundingClientRect();
    this.pointer.x = ((clientX - rect.left) / rect.width) * 2 - 1;
    this.pointer.y = -((clientY - rect.top) / rect.height) * 2 + 1;
  }
}
