import { describe, expect, it } from 'vitest';

import { parsePgm, toRgba } from '../src/pgm';

function bytes(header: string, raster: number[]): Uint8Array {
  const head = Array.from(header, (ch) => ch.charCodeAt(0));
  return new Uint8Array([...head, ...raster]);
}

describe('parsePgm', () => {
  it('reads an 8-bit graymap', () => {
    const image = parsePgm(bytes('P5 3 2 255\n', [0, 50, 100, 150, 200, 250]));
    expect(image.width).toBe(3);
    expect(image.height).toBe(2);
    expect(Array.from(image.gray)).toEqual([0, 50, 100, 150, 200, 250]);
  });

  it('honors header comments', () => {
    const image = parsePgm(
      bytes('P5\n# written by hand\n2 1\n# another\n255\n', [7, 9]));
    expect(Array.from(image.gray)).toEqual([7, 9]);
  });

  it('scales 2-byte big-endian samples to 0..255', () => {
    const image = parsePgm(
      bytes('P5 2 1 65535\n', [0xff, 0xff, 0x00, 0x00]));
    expect(Array.from(image.gray)).toEqual([255, 0]);
  });

  it('scales odd maxval values', () => {
    const image = parsePgm(bytes('P5 1 1 100\n', [50]));
    expect(image.gray[0]).toBe(128); // 50/100 of full range, rounded
  });

  it('rejects other formats and broken files', () => {
    expect(() => parsePgm(bytes('P6 1 1 255\n', [1, 2, 3])))
      .toThrow(/not a binary graymap/);
    expect(() => parsePgm(bytes('P5 2 2 255\n', [1, 2, 3])))
      .toThrow(/truncated raster/);
    expect(() => parsePgm(bytes('P5 0 2 255\n', []))).toThrow(/dimensions/);
    expect(() => parsePgm(bytes('P5 1 1 0\n', [1]))).toThrow(/maxval/);
    expect(() => parsePgm(bytes('P5 1', []))).toThrow(/truncated header/);
  });
});

describe('toRgba', () => {
  it('replicates gray into opaque RGBA', () => {
    const rgba = toRgba({ width: 2, height: 1, gray: new Uint8ClampedArray([3, 200]) });
    expect(Array.from(rgba)).toEqual([3, 3, 3, 255, 200, 200, 200, 255]);
  });
});
