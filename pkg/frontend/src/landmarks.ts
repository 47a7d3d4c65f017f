// The 15-point canon and the coordinate frame shared with the training
// pipeline. Order is load-bearing: the exported CSV columns, the
// on-screen point list and the auto-advance sequence all derive from
// this tuple, and the backend rejects any other header.

export const LANDMARK_NAMES = [
  'left_eye_center',
  'right_eye_center',
  'left_eye_inner_corner',
  'left_eye_outer_corner',
  'right_eye_inner_corner',
  'right_eye_outer_corner',
  'left_eyebrow_inner_end',
  'left_eyebrow_outer_end',
  'right_eyebrow_inner_end',
  'right_eyebrow_outer_end',
  'nose_tip',
  'mouth_left_corner',
  'mouth_right_corner',
  'mouth_center_top_lip',
  'mouth_center_bottom_lip',
] as const;

export type LandmarkName = (typeof LANDMARK_NAMES)[number];

export const N_LANDMARKS = LANDMARK_NAMES.length;

export const COLUMN_NAMES: readonly string[] = LANDMARK_NAMES.flatMap(
  (name) => [`${name}_x`, `${name}_y`],
);

export const HEADER = 'image_id,' + COLUMN_NAMES.join(',');

// Native frame is 96x96 with valid coordinates in [0, 95]; the canvas
// shows it at 4x.
export const FRAME = 96;
export const MAX_COORD = FRAME - 1;
export const ZOOM = 4;

export function roundCoordinate(v: number): number {
  return Math.round(v * 100) / 100;
}

/** Map a canvas-space click to native-frame coordinates.
 *
 * Divides the zoomed position back to the 96-frame and rounds to two
 * decimals first, then bounds-checks the value that would actually be
 * exported, so a click accepted here can never fail the backend's
 * [0, 95] range validation. Returns null for out-of-frame clicks.
 */
export function captureCoordinate(
  canvasX: number,
  canvasY: number,
): { x: number; y: number } | null {
  const x = roundCoordinate(canvasX / ZOOM);
  const y = roundCoordinate(canvasY / ZOOM);
  if (x < 0 || x > MAX_COORD || y < 0 || y > MAX_COORD) return null;
  return { x, y };
}
