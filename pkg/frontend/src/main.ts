/** Browser entry point: wires the session driver, the 3D scene, and the
 * rating / selection widgets together. Configuration is a single server URL
 * (?server=http://host:port, defaulting to the page origin). */

import * as THREE from "three";

import { StudyApi } from "./api.js";
import { StudyScene } from "./render.js";
import { TrialRunner } from "./trialflow.js";
import { SubmissionBlockedError } from "./selection.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

async function run(): Promise<void> {
  const params = new URLSearchParams(location.search);
  const server = params.get("server") ?? location.origin;
  const participant = params.get("participant")
    ?? `anon-${Math.random().toString(36).slice(2, 8)}`;

  const canvas = el<HTMLCanvasElement>("view");
  const status = el<HTMLDivElement>("status");
  const ratingBox = el<HTMLDivElement>("rating");
  const errorBox = el<HTMLDivElement>("error");

  const renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
  renderer.setSize(canvas.clientWidth, canvas.clientHeight, false);
  const scene = new StudyScene(canvas.clientWidth / canvas.clientHeight);
  const runner = new TrialRunner(new StudyApi(server));

  const showError = (detail: string) => {
    errorBox.textContent = `Trial could not be displayed: ${detail}. `
      + "Press N to continue; the problem was logged.";
    errorBox.style.display = "block";
  };

  const advance = async () => {
    errorBox.style.display = "none";
    ratingBox.style.display = "none";
    let trial;
    try {
      trial = await runner.startNext();
    } catch (err) {
      showError(String(err));
      return;
    }
    if (trial === null) {
      status.textContent = "Session complete, thank you!";
      return;
    }
    status.textContent = `Trial ${runner.presentedOrder.length}`
      + `/${runner.totalTrials} - stage ${trial.view.stage}`
      + ` (${trial.view.condition})`;
    scene.loadTrial(trial.view.clip, trial.view.condition, trial.selection);
    if (trial.view.stage === 1) {
      trial.clock.onMotionFinished(() => {
        ratingBox.style.display = "block";
      });
    }
  };

  const frame = () => {
    requestAnimationFrame(frame);
    if (runner.current !== null) {
      scene.showFrame(runner.tick());
      if (runner.current.selection !== null) {
        scene.syncSphereColors(runner.current.selection);
      }
    }
    renderer.render(scene.scene, scene.camera);
  };

  const rate = async (value: number) => {
    try {
      if (await runner.submitRating(value)) {
        await advance();
      }
    } catch {
      /* rating before playback end: ignore the click */
    }
  };
  for (let v = 1; v <= 5; v++) {
    el<HTMLButtonElement>(`rate-${v}`).addEventListener("click", () => rate(v));
  }
  addEventListener("keydown", (ev) => {
    if (ev.key >= "1" && ev.key <= "5") void rate(Number(ev.key));
    if (ev.key === "n" && errorBox.style.display === "block") void advance();
  });

  canvas.addEventListener("click", async (ev) => {
    const trial = runner.current;
    if (trial === null || trial.selection === null) return;
    const rect = canvas.getBoundingClientRect();
    const ray = scene.viewerRay(
      ((ev.clientX - rect.left) / rect.width) * 2 - 1,
      -((ev.clientY - rect.top) / rect.height) * 2 + 1);
    try {
      if (await runner.confirmSelection(ray) !== null) {
        await advance();
      }
    } catch (err) {
      if (!(err instanceof SubmissionBlockedError)) throw err;
      // clicks during motion are a visible no-op: spheres stay black
    }
  });

  await runner.begin(participant);
  await advance();
  frame();
}

run().catch((err) => {
  document.body.textContent = `Could not start the study: ${err}`;
});
