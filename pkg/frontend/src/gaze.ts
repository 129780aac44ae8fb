// Cursor-to-fixation mapping: a normalized canvas position plus the depth
// slider's diopter value become a 3D head-space fixation point. Conventions
// match the server: right-handed, the viewer looks down -z, +y up, so canvas
// y (which grows downward) flips sign.

const DEG = Math.PI / 180;

/** Distance used when the depth slider sits at 0 D ("infinity"). */
export const FAR_FIXATION_M = 100;

export function dioptersToMeters(diopters: number): number {
  if (diopters <= 1 / FAR_FIXATION_M) return FAR_FIXATION_M;
  return 1 / diopters;
}

/**
 * Map a cursor position in normalized canvas coordinates ([-1, 1], y down)
 * to a fixation point at the given depth. The canvas spans the session
 * frustum's field of view, so the cursor azimuth/elevation scale with the
 * half-angle.
 */
export function cursorToFixation(
  xNorm: number,
  yNorm: number,
  fovHalfDeg: number,
  depthDiopters: number,
): [number, number, number] {
  const az = clamp(xNorm, -1, 1) * fovHalfDeg * DEG;
  const el = -clamp(yNorm, -1, 1) * fovHalfDeg * DEG;
  const dir = [Math.tan(az), Math.tan(el), -1];
  const norm = Math.hypot(dir[0]!, dir[1]!, dir[2]!);
  const dist = dioptersToMeters(depthDiopters);
  return [
    (dist * dir[0]!) / norm,
    (dist * dir[1]!) / norm,
    (dist * dir[2]!) / norm,
  ];
}

/** Eccentricity (degrees) of a fixation point, for the telemetry readout. */
export function fixationEccentricityDeg(fixation: [number, number, number]): number {
  const [x, y, z] = fixation;
  const lateral = Math.hypot(x, y);
  return Math.atan2(lateral, -z) / DEG;
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}
