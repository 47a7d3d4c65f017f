import { describe, expect, it } from 'vitest';

import { N_LANDMARKS } from '../src/landmarks';
import {
  completedIds,
  currentImage,
  isComplete,
  newSession,
  nextUndecided,
  placePoint,
  selectImage,
  selectPoint,
  skipPoint,
  undo,
  type Session,
} from '../src/session';

function image(session: Session) {
  const im = currentImage(session);
  if (!im) throw new Error('no current image');
  return im;
}

describe('placement workflow', () => {
  it('auto-advances through the canonical order and completes at 15', () => {
    const s = newSession(['a']);
    for (let i = 0; i < N_LANDMARKS; i++) {
      expect(image(s).pointIndex).toBe(i);
      expect(placePoint(s, i + 0.25, 90 - i)).toBe(true);
    }
    expect(image(s).pointIndex).toBeNull();
    expect(isComplete(image(s).draft)).toBe(true);
    expect(completedIds(s)).toEqual(['a']);
  });

  it('skip records a missing point and advances', () => {
    const s = newSession(['a']);
    expect(skipPoint(s)).toBe(true);
    expect(image(s).draft[0]).toEqual({ kind: 'skipped' });
    expect(image(s).pointIndex).toBe(1);
  });

  it('a skipped point still counts toward completion', () => {
    const s = newSession(['a']);
    for (let i = 0; i < N_LANDMARKS; i++) {
      if (i === 5) skipPoint(s);
      else placePoint(s, 10, 10);
    }
    expect(isComplete(image(s).draft)).toBe(true);
    expect(image(s).pointIndex).toBeNull();
  });

  it('advance wraps around to earlier undecided points', () => {
    const s = newSession(['a']);
    // decide 0..13, then jump back and re-place point 3; the cursor
    // must land on 14, the only remaining todo
    for (let i = 0; i < 14; i++) placePoint(s, 20, 20);
    selectPoint(s, 3);
    placePoint(s, 33, 44);
    expect(image(s).pointIndex).toBe(14);
  });

  it('re-placing keeps exactly one pair per point', () => {
    const s = newSession(['a']);
    placePoint(s, 10, 11);
    selectPoint(s, 0);
    placePoint(s, 20.5, 21.5);
    expect(image(s).draft[0]).toEqual({ kind: 'placed', x: 20.5, y: 21.5 });
    expect(image(s).draft.filter((p) => p.kind === 'placed')).toHaveLength(1);
  });

  it('ignores placement when nothing is selected', () => {
    const s = newSession(['a']);
    for (let i = 0; i < N_LANDMARKS; i++) placePoint(s, 5, 5);
    const before = JSON.parse(JSON.stringify(image(s).draft));
    expect(placePoint(s, 50, 50)).toBe(false);
    expect(image(s).draft).toEqual(before);
  });

  it('rejects out-of-frame coordinates as a backstop', () => {
    const s = newSession(['a']);
    expect(placePoint(s, 95.01, 4)).toBe(false);
    expect(placePoint(s, -0.01, 4)).toBe(false);
    expect(image(s).pointIndex).toBe(0);
    expect(image(s).undoStack).toHaveLength(0);
  });
});

describe('undo', () => {
  it('restores the previous draft exactly, cursor included', () => {
    const s = newSession(['a']);
    placePoint(s, 1.25, 2.5);
    skipPoint(s);
    const before = JSON.parse(JSON.stringify(image(s).draft));
    const cursorBefore = image(s).pointIndex;
    placePoint(s, 77.77, 8);
    expect(undo(s)).toBe(true);
    expect(image(s).draft).toEqual(before);
    expect(image(s).pointIndex).toBe(cursorBefore);
  });

  it('undoes a relocation back to the original coordinates', () => {
    const s = newSession(['a']);
    placePoint(s, 10, 11);
    selectPoint(s, 0);
    placePoint(s, 30, 31);
    undo(s);
    expect(image(s).draft[0]).toEqual({ kind: 'placed', x: 10, y: 11 });
  });

  it('is a no-op on a fresh image', () => {
    const s = newSession(['a']);
    expect(undo(s)).toBe(false);
    expect(image(s).draft.every((p) => p.kind === 'todo')).toBe(true);
  });

  it('tracks each image separately', () => {
    const s = newSession(['a', 'b']);
    placePoint(s, 10, 10);
    selectImage(s, 1);
    placePoint(s, 20, 20);
    undo(s);
    expect(image(s).draft[0]).toEqual({ kind: 'todo' });
    selectImage(s, 0);
    expect(image(s).draft[0]).toEqual({ kind: 'placed', x: 10, y: 10 });
  });
});

describe('navigation', () => {
  it('clamps image selection to the list', () => {
    const s = newSession(['a', 'b']);
    expect(selectImage(s, 2)).toBe(false);
    expect(selectImage(s, -1)).toBe(false);
    expect(selectImage(s, 1)).toBe(true);
    expect(image(s).id).toBe('b');
  });

  it('clamps point selection to the canon', () => {
    const s = newSession(['a']);
    expect(selectPoint(s, N_LANDMARKS)).toBe(false);
    expect(selectPoint(s, 14)).toBe(true);
    expect(image(s).pointIndex).toBe(14);
  });
});

describe('nextUndecided', () => {
  it('walks forward with wrap-around', () => {
    const s = newSession(['a']);
    const draft = image(s).draft;
    expect(nextUndecided(draft, 0)).toBe(1);
    expect(nextUndecided(draft, 14)).toBe(0);
    draft.forEach((_, i) => { draft[i] = { kind: 'skipped' }; });
    expect(nextUndecided(draft, 7)).toBeNull();
  });
});
