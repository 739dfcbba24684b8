/**
 * Wire types shared with the inspection pipeline, plus the detector-head
 * consistency rule. The bridge talks to the pipeline exclusively through the
 * detections JSON document defined here.
 */

/** Canonical class names, in stable id order 0..3. */
export const CANONICAL_CLASSES = ['Capacitor', 'Resistor', 'Inductor', 'IC'] as const;

export interface BBoxJson {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface DetectionJson {
  class: string;
  bbox: BBoxJson;
  confidence: number;
}

export interface DetectionsDocument {
  image: { width: number; height: number };
  detections: DetectionJson[];
}

export interface BridgeConfig {
  modelPath: string;
  /** Detector output id -> class name; must be a permutation of the canonical set. */
  classNames: string[];
  /** Square detector input edge; inferred from the model when it is static. */
  inputSize?: number;
}

/** Filters the final detection layer must carry per scale: (classes + 5) * 3. */
export function filtersForClasses(numClasses: number): number {
  if (numClasses < 1) {
    throw new Error(`number of classes must be >= 1, got ${numClasses}`);
  }
  return (numClasses + 5) * 3;
}

/**
 * Normalize a user-supplied class list. Exactly four names, matching the
 * canonical set up to case; the given ORDER is kept (it maps detector output
 * ids to names).
 */
export function resolveClassNames(raw: string[]): string[] {
  const canonicalByLower = new Map(CANONICAL_CLASSES.map((c) => [c.toLowerCase(), c]));
  const resolved = raw.map((name) => {
    const hit = canonicalByLower.get(name.trim().toLowerCase());
    if (!hit) {
      throw new Error(
        `unknown class ${JSON.stringify(name)}; expected a permutation of ` +
          CANONICAL_CLASSES.join(', '),
      );
    }
    return hit;
  });
  if (resolved.length !== CANONICAL_CLASSES.length || new Set(resolved).size !== resolved.length) {
    throw new Error(
      `class list must name each of ${CANONICAL_CLASSES.join(', ')} exactly once, ` +
        `got [${raw.join(', ')}]`,
    );
  }
  return resolved;
}

/**
 * Check the model's per-detection width V (= 4 box + 1 objectness + classes)
 * against the configured class count via the filter formula. Returns the
 * class count the model actually carries.
 */
export function validateHeadWidth(valuesPerDetection: number, numClasses: number): number {
  const expectedWidth = numClasses + 5;
  if (valuesPerDetection !== expectedWidth) {
    throw new Error(
      `model head width ${valuesPerDetection} per detection (${3 * valuesPerDetection} filters ` +
        `per scale) does not match the ${numClasses}-class configuration, which requires ` +
        `${expectedWidth} (${filtersForClasses(numClasses)} filters per scale)`,
    );
  }
  return valuesPerDetection - 5;
}
