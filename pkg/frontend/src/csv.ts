// Landmark table export. The output must parse through the training
// pipeline's loader unchanged: exact header string, 31 columns, one
// row per completed image, empty cells for missing points.

import { HEADER, roundCoordinate } from './landmarks';
import { isComplete, type Session } from './session';

/** Two decimal places at most; trailing zeros are dropped so values
 *  like 40 export as "40", not "40.00". */
export function formatCoordinate(v: number): string {
  return String(roundCoordinate(v));
}

export function canExport(session: Session): boolean {
  return session.images.some((im) => isComplete(im.draft));
}

export function exportTable(session: Session): string {
  const lines = [HEADER];
  for (const image of session.images) {
    if (!isComplete(image.draft)) continue;
    const cells = [image.id];
    for (const point of image.draft) {
      if (point.kind === 'placed') {
        cells.push(formatCoordinate(point.x), formatCoordinate(point.y));
      } else {
        cells.push('', '');
      }
    }
    lines.push(cells.join(','));
  }
  return lines.join('\n') + '\n';
}
