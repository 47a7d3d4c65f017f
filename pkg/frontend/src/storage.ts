// Draft autosave. Only the decided points survive a reload: undo
// stacks are session memory, and the cursor is recomputed as the first
// undecided point. Drafts reattach to a freshly selected folder by
// image id, so files renamed or removed between visits simply lose
// their draft.

import type { Draft, Session } from './session';
import { emptyDraft, newSession, nextUndecided } from './session';
import { MAX_COORD, N_LANDMARKS } from './landmarks';

export const STORAGE_KEY = 'toonface.annotator.v1';

type StoredPoint = [number, number] | 'skip' | null;

interface StoredSession {
  version: 1;
  images: { id: string; points: StoredPoint[] }[];
}

export function serializeSession(session: Session): string {
  const stored: StoredSession = {
    version: 1,
    images: session.images.map((im) => ({
      id: im.id,
      points: im.draft.map((p): StoredPoint => {
        if (p.kind === 'placed') return [p.x, p.y];
        if (p.kind === 'skipped') return 'skip';
        return null;
      }),
    })),
  };
  return JSON.stringify(stored);
}

function draftFrom(points: StoredPoint[]): Draft | null {
  if (!Array.isArray(points) || points.length !== N_LANDMARKS) return null;
  const draft = emptyDraft();
  for (let i = 0; i < N_LANDMARKS; i++) {
    const p = points[i];
    if (p === null) continue;
    if (p === 'skip') {
      draft[i] = { kind: 'skipped' };
    } else if (
      Array.isArray(p) && p.length === 2 &&
      typeof p[0] === 'number' && typeof p[1] === 'number' &&
      p[0] >= 0 && p[0] <= MAX_COORD && p[1] >= 0 && p[1] <= MAX_COORD
    ) {
      draft[i] = { kind: 'placed', x: p[0], y: p[1] };
    } else {
      return null; // corrupt entry poisons the whole draft
    }
  }
  return draft;
}

/** Rebuild a session for `ids` (the authoritative, freshly loaded image
 *  list), reattaching any stored drafts. Corrupt or foreign payloads
 *  fall back to a fresh session. */
export function restoreSession(raw: string | null, ids: readonly string[]): Session {
  const session = newSession(ids);
  if (!raw) return session;
  let stored: unknown;
  try {
    stored = JSON.parse(raw);
  } catch {
    return session;
  }
  const payload = stored as Partial<StoredSession>;
  if (!payload || payload.version !== 1 || !Array.isArray(payload.images)) {
    return session;
  }
  const byId = new Map<string, StoredPoint[]>();
  for (const entry of payload.images) {
    if (entry && typeof entry.id === 'string' && Array.isArray(entry.points)) {
      byId.set(entry.id, entry.points);
    }
  }
  for (const image of session.images) {
    const points = byId.get(image.id);
    const draft = points ? draftFrom(points) : null;
    if (!draft) continue;
    image.draft = draft;
    // wrap-around search from the last slot = first undecided in order
    image.pointIndex = nextUndecided(draft, N_LANDMARKS - 1);
  }
  return session;
}
