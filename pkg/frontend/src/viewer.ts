// three.js rendering of the current cut: shaded surface, wireframe overlay
// and pickable vertex points. The viewer owns the camera and low-level
// picking/drag math; tool behavior lives in ui.ts.

import * as THREE from "three";
import type { GeometryArrays } from "./state.js";

const BASE_COLOR = new THREE.Color(0x8899bb);
const SELECTED_COLOR = new THREE.Color(0xffb521);

export interface Viewer {
  element: HTMLCanvasElement;
  setCut(geom: GeometryArrays, selected: Set<number>): void;
  setSelection(selected: Set<number>): void;
  updatePositions(changed: number[][]): void;
  pickVertex(clientX: number, clientY: number): number | null;
  dragDelta(index: number, fromX: number, fromY: number,
            toX: number, toY: number): [number, number, number];
  rotateBy(dx: number, dy: number): void;
  panBy(dx: number, dy: number): void;
  zoomBy(factor: number): void;
  resize(): void;
  dispose(): void;
}

export function createViewer(container: HTMLElement): Viewer {
  const renderer = new THREE.WebGLRenderer({ antialias: true });
  renderer.setPixelRatio(Math.min(window.devicePixelRatio, 2));
  renderer.setSize(container.clientWidth, container.clientHeight);
  renderer.setClearColor(0x14171c);
  container.appendChild(renderer.domElement);

  const scene = new THREE.Scene();
  const camera = new THREE.PerspectiveCamera(
    45, container.clientWidth / Math.max(1, container.clientHeight),
    0.01, 1e5);

  scene.add(new THREE.HemisphereLight(0xffffff, 0x334, 0.9));
  const dir = new THREE.DirectionalLight(0xffffff, 1.2);
  dir.position.set(3, 5, 4);
  scene.add(dir);

  // orbit state: spherical coordinates around a target
  const target = new THREE.Vector3();
  let radius = 10;
  let theta = Math.PI / 4;
  let phi = Math.PI / 3;

  function updateCamera() {
    phi = Math.min(Math.max(phi, 0.05), Math.PI - 0.05);
    camera.position.set(
      target.x + radius * Math.sin(phi) * Math.cos(theta),
      target.y + radius * Math.sin(phi) * Math.sin(theta),
      target.z + radius * Math.cos(phi));
    camera.up.set(0, 0, 1);
    camera.lookAt(target);
  }

  const geometry = new THREE.BufferGeometry();
  const material = new THREE.MeshStandardMaterial({
    color: BASE_COLOR, flatShading: true, side: THREE.DoubleSide,
    polygonOffset: true, polygonOffsetFactor: 1, polygonOffsetUnits: 1,
  });
  const mesh = new THREE.Mesh(geometry, material);
  scene.add(mesh);
  const wire = new THREE.Mesh(geometry, new THREE.MeshBasicMaterial({
    color: 0x30364a, wireframe: true,
  }));
  scene.add(wire);

  const pointsGeometry = new THREE.BufferGeometry();
  const pointsMaterial = new THREE.PointsMaterial({
    size: 6, sizeAttenuation: false, vertexColors: true,
  });
  const points = new THREE.Points(pointsGeometry, pointsMaterial);
  scene.add(points);

  let nodeIds: number[] = [];
  const raycaster = new THREE.Raycaster();

  function render() {
    renderer.render(scene, camera);
  }

  let disposed = false;
  function loop() {
    if (disposed) return;
    render();
    requestAnimationFrame(loop);
  }
  requestAnimationFrame(loop);

  function fitCamera() {
    geometry.computeBoundingSphere();
    const sphere = geometry.boundingSphere;
    if (!sphere || !isFinite(sphere.radius) || sphere.radius <= 0) return;
    target.copy(sphere.center);
    radius = sphere.radius * 2.5;
    raycaster.params.Points = { threshold: sphere.radius / 60 };
    updateCamera();
  }

  let first = true;

  function paintSelection(selected: Set<number>) {
    const n = nodeIds.length;
    const colors = new Float32Array(n * 3);
    for (let i = 0; i < n; i++) {
      const c = selected.has(nodeIds[i]) ? SELECTED_COLOR : BASE_COLOR;
      colors[3 * i] = c.r;
      colors[3 * i + 1] = c.g;
      colors[3 * i + 2] = c.b;
    }
    pointsGeometry.setAttribute("color",
                                new THREE.BufferAttribute(colors, 3));
    pointsGeometry.attributes.color.needsUpdate = true;
  }

  function ndc(clientX: number, clientY: number): THREE.Vector2 {
    const rect = renderer.domElement.getBoundingClientRect();
    return new THREE.Vector2(
      ((clientX - rect.left) / rect.width) * 2 - 1,
      -((clientY - rect.top) / rect.height) * 2 + 1);
  }

  return {
    element: renderer.domElement,

    setCut(geom, selected) {
      const pos = new THREE.BufferAttribute(geom.positions, 3);
      geometry.setAttribute("position", pos);
      geometry.setIndex(new THREE.BufferAttribute(geom.indices, 1));
      geometry.computeVertexNormals();
      pointsGeometry.setAttribute("position", pos);
      nodeIds = geom.nodeIds;
      paintSelection(selected);
      geometry.computeBoundingSphere();
      pointsGeometry.boundingSphere = geometry.boundingSphere;
      if (first) {
        fitCamera();
        first = false;
      }
    },

    setSelection(selected) {
      paintSelection(selected);
    },

    updatePositions(changed) {
      const attr = geometry.getAttribute("position");
      if (!attr) return;
      for (const [node, x, y, z] of changed) {
        const i = nodeIds.indexOf(node);
        if (i >= 0) attr.setXYZ(i, x, y, z);
      }
      attr.needsUpdate = true;
      geometry.computeVertexNormals();
      geometry.computeBoundingSphere();
      pointsGeometry.boundingSphere = geometry.boundingSphere;
    },

    pickVertex(clientX, clientY) {
      if (!nodeIds.length) return null;
      raycaster.setFromCamera(ndc(clientX, clientY), camera);
      const hits = raycaster.intersectObject(points);
      if (!hits.length) return null;
      return hits[0].index ?? null;
    },

    dragDelta(index, fromX, fromY, toX, toY) {
      // displace in the view plane through the grabbed vertex
      const attr = geometry.getAttribute("position");
      const origin = new THREE.Vector3().fromBufferAttribute(attr as any,
                                                             index);
      const normal = new THREE.Vector3();
      camera.getWorldDirection(normal);
      const plane = new THREE.Plane().setFromNormalAndCoplanarPoint(normal,
                                                                    origin);
      const hit = (x: number, y: number) => {
        raycaster.setFromCamera(ndc(x, y), camera);
        const out = new THREE.Vector3();
        return raycaster.ray.intersectPlane(plane, out) ? out : origin;
      };
      const a = hit(fromX, fromY);
      const b = hit(toX, toY);
      return [b.x - a.x, b.y - a.y, b.z - a.z];
    },

    rotateBy(dx, dy) {
      theta -= dx * 0.008;
      phi -= dy * 0.008;
      updateCamera();
    },

    panBy(dx, dy) {
      const right = new THREE.Vector3();
      camera.getWorldDirection(right);
      const up = camera.up.clone();
      right.cross(up).normalize();
      const scale = radius * 0.0015;
      target.addScaledVector(right, -dx * scale);
      target.addScaledVector(up, dy * scale);
      updateCamera();
    },

    zoomBy(factor) {
      radius = Math.max(radius * factor, 1e-3);
      updateCamera();
    },

    resize() {
      const w = container.clientWidth;
      const h = Math.max(1, container.clientHeight);
      camera.aspect = w / h;
      camera.updateProjectionMatrix();
      renderer.setSize(w, h);
    },

    dispose() {
      disposed = true;
      renderer.dispose();
      renderer.domElement.remove();
    },
  };
}
