// Annotation session state: one draft of the 15 canonical points per
// image, a cursor into the canonical order, and an undo stack per
// image. All functions mutate the session in place; undo works off
// deep snapshots taken before every draft change.

import { MAX_COORD, N_LANDMARKS } from './landmarks';

export type PointState =
  | { kind: 'todo' }
  | { kind: 'skipped' }
  | { kind: 'placed'; x: number; y: number };

export type Draft = PointState[];

interface Snapshot {
  draft: Draft;
  pointIndex: number | null;
}

export interface ImageAnnotation {
  id: string;
  draft: Draft;
  /** Next point to place, in canonical order; null once every point
   *  is decided and nothing is explicitly selected. */
  pointIndex: number | null;
  undoStack: Snapshot[];
}

export interface Session {
  images: ImageAnnotation[];
  current: number;
}

export function emptyDraft(): Draft {
  return Array.from({ length: N_LANDMARKS }, () => ({ kind: 'todo' as const }));
}

export function newSession(ids: readonly string[]): Session {
  return {
    images: ids.map((id) => ({
      id,
      draft: emptyDraft(),
      pointIndex: 0,
      undoStack: [],
    })),
    current: 0,
  };
}

export function currentImage(session: Session): ImageAnnotation | null {
  return session.images[session.current] ?? null;
}

export function isComplete(draft: Draft): boolean {
  return draft.every((p) => p.kind !== 'todo');
}

export function completedIds(session: Session): string[] {
  return session.images.filter((im) => isComplete(im.draft)).map((im) => im.id);
}

function copyDraft(draft: Draft): Draft {
  return draft.map((p) => ({ ...p }));
}

/** First undecided point strictly after `from` in canonical order,
 *  wrapping around; null when the draft is fully decided. */
export function nextUndecided(draft: Draft, from: number): number | null {
  for (let step = 1; step <= draft.length; step++) {
    const i = (from + step) % draft.length;
    if (draft[i]!.kind === 'todo') return i;
  }
  return null;
}

function snapshot(image: ImageAnnotation): void {
  image.undoStack.push({
    draft: copyDraft(image.draft),
    pointIndex: image.pointIndex,
  });
}

/** Place the selected point and advance the cursor to the next
 *  undecided one. Returns false (draft untouched) when no point is
 *  selected or the coordinates fall outside the valid frame; callers
 *  are expected to filter clicks through captureCoordinate first so
 *  the bounds guard here is a backstop. */
export function placePoint(session: Session, x: number, y: number): boolean {
  const image = currentImage(session);
  if (!image || image.pointIndex === null) return false;
  if (x < 0 || x > MAX_COORD || y < 0 || y > MAX_COORD) return false;
  snapshot(image);
  const at = image.pointIndex;
  image.draft[at] = { kind: 'placed', x, y };
  image.pointIndex = nextUndecided(image.draft, at);
  return true;
}

/** Mark the selected point as missing and advance. */
export function skipPoint(session: Session): boolean {
  const image = currentImage(session);
  if (!image || image.pointIndex === null) return false;
  snapshot(image);
  const at = image.pointIndex;
  image.draft[at] = { kind: 'skipped' };
  image.pointIndex = nextUndecided(image.draft, at);
  return true;
}

/** Select a point for (re)placement; placing then overwrites it, which
 *  keeps the one-pair-per-point invariant. */
export function selectPoint(session: Session, index: number): boolean {
  const image = currentImage(session);
  if (!image || index < 0 || index >= N_LANDMARKS) return false;
  image.pointIndex = index;
  return true;
}

export function selectImage(session: Session, index: number): boolean {
  if (index < 0 || index >= session.images.length) return false;
  session.current = index;
  return true;
}

/** Restore the current image's previous draft and cursor exactly.
 *  No-op on an empty stack. */
export function undo(session: Session): boolean {
  const image = currentImage(session);
  const top = image?.undoStack.pop();
  if (!image || !top) return false;
  image.draft = top.draft;
  image.pointIndex = top.pointIndex;
  return true;
}
