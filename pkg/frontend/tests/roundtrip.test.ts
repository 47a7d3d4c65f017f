// The contract that makes this tool useful at all: a file exported
// from an annotated session must sail through the training pipeline's
// `toonface validate-annotations` with zero findings, and the numbers
// in it must sit within 0.01 px of where the annotator clicked.
// Needs the Python package installed (the `toonface` entry point on
// PATH); skipped otherwise.

import { spawnSync } from 'node:child_process';
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { afterAll, describe, expect, it } from 'vitest';

import { HEADER, N_LANDMARKS, ZOOM, captureCoordinate } from '../src/landmarks';
import { exportTable } from '../src/csv';
import { newSession, placePoint, selectImage, skipPoint } from '../src/session';

const havePrimary =
  spawnSync('toonface', ['--help'], { encoding: 'utf8' }).status === 0;

// deterministic clicks so a failure is reproducible
function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}

describe.skipIf(!havePrimary)('export round trip', () => {
  const workDir = mkdtempSync(join(tmpdir(), 'annotator-roundtrip-'));
  afterAll(() => rmSync(workDir, { recursive: true, force: true }));

  const ids = ['crop_007', 'crop_019', 'crop_023'];
  const session = newSession(ids);
  const clicks = new Map<string, { x: number; y: number }[]>();
  const rand = lcg(20260819);

  for (let imageNo = 0; imageNo < ids.length; imageNo++) {
    selectImage(session, imageNo);
    const placed: { x: number; y: number }[] = [];
    for (let point = 0; point < N_LANDMARKS; point++) {
      if (imageNo === 1 && point === 10) {
        skipPoint(session); // occluded nose on the second image
        placed.push({ x: NaN, y: NaN });
        continue;
      }
      // raw sub-pixel canvas click inside the valid 4x region
      const click = { x: rand() * 95 * ZOOM, y: rand() * 95 * ZOOM };
      const coords = captureCoordinate(click.x, click.y);
      expect(coords).not.toBeNull();
      expect(placePoint(session, coords!.x, coords!.y)).toBe(true);
      placed.push(click);
    }
    clicks.set(ids[imageNo]!, placed);
  }

  const tablePath = join(workDir, 'landmarks.csv');
  writeFileSync(tablePath, exportTable(session));

  it('is accepted by validate-annotations with zero findings', () => {
    const runDir = join(workDir, 'run');
    const result = spawnSync(
      'toonface',
      ['validate-annotations', '--table', tablePath, '--out', runDir],
      { encoding: 'utf8' },
    );
    expect(result.error).toBeUndefined();
    expect(result.stderr).toBe('');
    expect(result.status).toBe(0);
    const violations = readFileSync(join(runDir, 'violations.csv'), 'utf8')
      .trimEnd().split('\n');
    expect(violations).toEqual(['image_id,column,value,reason']);
  });

  it('keeps every exported coordinate within 0.01 px of the click', () => {
    const lines = readFileSync(tablePath, 'utf8').trimEnd().split('\n');
    expect(lines[0]).toBe(HEADER);
    expect(lines).toHaveLength(1 + ids.length);
    for (const line of lines.slice(1)) {
      const cells = line.split(',');
      const placed = clicks.get(cells[0]!)!;
      expect(placed).toBeDefined();
      for (let point = 0; point < N_LANDMARKS; point++) {
        const rawX = cells[1 + 2 * point]!;
        const rawY = cells[2 + 2 * point]!;
        if (Number.isNaN(placed[point]!.x)) {
          expect(rawX).toBe('');
          expect(rawY).toBe('');
          continue;
        }
        // on-screen position is the click divided back to the 96 frame
        expect(Math.abs(Number(rawX) - placed[point]!.x / ZOOM))
          .toBeLessThanOrEqual(0.01);
        expect(Math.abs(Number(rawY) - placed[point]!.y / ZOOM))
          .toBeLessThanOrEqual(0.01);
      }
    }
  });
});
