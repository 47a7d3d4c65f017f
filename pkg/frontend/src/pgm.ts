// Binary portable graymap (P5) decoding, enough to display the crops
// the training pipeline reads and writes. Comments in the header are
// honored; both 1-byte and 2-byte (big-endian) sample widths load,
// scaled to 0..255 for display.

export interface GrayImage {
  width: number;
  height: number;
  gray: Uint8ClampedArray<ArrayBuffer>;
}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a ||
    byte === 0x0d || byte === 0x0b || byte === 0x0c;
}

class TokenReader {
  constructor(private data: Uint8Array, public pos = 0) {}

  next(): string {
    // skip whitespace and # comments, which run to end of line
    while (this.pos < this.data.length) {
      const byte = this.data[this.pos]!;
      if (isSpace(byte)) {
        this.pos++;
      } else if (byte === 0x23) {
        while (this.pos < this.data.length && this.data[this.pos] !== 0x0a) {
          this.pos++;
        }
      } else {
        break;
      }
    }
    const start = this.pos;
    while (this.pos < this.data.length && !isSpace(this.data[this.pos]!)) {
      this.pos++;
    }
    if (start === this.pos) throw new Error('pgm: truncated header');
    let token = '';
    for (let i = start; i < this.pos; i++) {
      token += String.fromCharCode(this.data[i]!);
    }
    return token;
  }
}

export function parsePgm(bytes: ArrayBuffer | Uint8Array): GrayImage {
  const data = bytes instanceof Uint8Array ? bytes : new Uint8Array(bytes);
  const reader = new TokenReader(data);
  if (reader.next() !== 'P5') throw new Error('pgm: not a binary graymap');
  const width = Number(reader.next());
  const height = Number(reader.next());
  const maxval = Number(reader.next());
  if (!Number.isInteger(width) || !Number.isInteger(height) ||
      width < 1 || height < 1) {
    throw new Error('pgm: bad dimensions');
  }
  if (!Number.isInteger(maxval) || maxval < 1 || maxval > 65535) {
    throw new Error(`pgm: bad maxval ${maxval}`);
  }
  reader.pos++; // single whitespace byte separates header from raster
  const wide = maxval > 255;
  const need = width * height * (wide ? 2 : 1);
  if (data.length - reader.pos < need) throw new Error('pgm: truncated raster');
  const gray = new Uint8ClampedArray(width * height);
  for (let i = 0; i < width * height; i++) {
    const at = reader.pos + (wide ? 2 * i : i);
    const value = wide ? (data[at]! << 8) | data[at + 1]! : data[at]!;
    gray[i] = Math.round((value / maxval) * 255);
  }
  return { width, height, gray };
}

/** Expand to RGBA for ImageData. */
export function toRgba(image: GrayImage): Uint8ClampedArray<ArrayBuffer> {
  const out = new Uint8ClampedArray(image.width * image.height * 4);
  for (let i = 0; i < image.gray.length; i++) {
    const v = image.gray[i]!;
    out[4 * i] = v;
    out[4 * i + 1] = v;
    out[4 * i + 2] = v;
    out[4 * i + 3] = 255;
  }
  return out;
}
