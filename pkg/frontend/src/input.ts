// Keyboard-to-wire mapping. Keyboards are binary, so steering accumulates in
// fixed steps per tick while an arrow is held; the spacebar toggles takeover
// on each press edge. One batch of messages per received telemetry tick.

import type { ClientMessage } from "./protocol.js";

export const STEERING_STEP = 0.02; // rad per tick
export const STEERING_LIMIT = 0.5; // rad
export const THROTTLE_STEP = 0.05; // per tick
export const RIGHT_IS_NEGATIVE = -1;

export interface KeyState {
  left: boolean;
  right: boolean;
  up: boolean;
  down: boolean;
  space: boolean;
}

export function emptyKeys(): KeyState {
  return { left: false, right: false, up: false, down: false, space: false };
}

export class InputMapper {
  steering = 0;
  throttle = 0;
  takeoverActive = false;
  private spaceWasDown = false;

  // Messages to send for one tick given the current keyboard state.
  tick(keys: KeyState, evalMode: boolean): ClientMessage[] {
    const out: ClientMessage[] = [];

    if (keys.space && !this.spaceWasDown && evalMode) {
      this.takeoverActive = !this.takeoverActive;
      out.push({ kind: this.takeoverActive ? "takeover_begin" : "takeover_end" });
    }
    this.spaceWasDown = keys.space;

    if (keys.left) this.steering += STEERING_STEP;
    if (keys.right) this.steering += RIGHT_IS_NEGATIVE * STEERING_STEP;
    this.steering = clamp(this.steering, -STEERING_LIMIT, STEERING_LIMIT);

    if (keys.up) this.throttle += THROTTLE_STEP;
    if (keys.down) this.throttle -= THROTTLE_STEP;
    this.throttle = clamp(this.throttle, 0, 1);

    out.push({ kind: "control", steering: round6(this.steering), throttle: round6(this.throttle) });
    return out;
  }
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(Math.max(v, lo), hi);
}

function round6(v: number): number {
  return Math.round(v * 1e6) / 1e6;
}
