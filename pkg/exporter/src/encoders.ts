/**
 * Encoder contracts plus the built-in deterministic stub.
 *
 * Real pretrained encoders plug in as ES modules: `--encoder module:./clip.mjs`
 * dynamically imports the file and calls its default export to obtain an
 * object satisfying TextImageEncoder (and CrossEncoder for pair exports).
 * The stub encoder (`--encoder stub:seed=7,dim=64,scale=2.5`) hashes inputs
 * to unit vectors and is what the test suite runs against: it exercises every
 * format, counting, and determinism contract without model weights.
 */

import { createHash } from 'node:crypto';

export interface TextImageEncoder {
  readonly name: string;
  readonly dim: number;
  /** The model's learned softmax temperature, recorded in the store header. */
  readonly logitScale: number;
  encodeTexts(texts: string[]): Promise<Float64Array[]>;
  encodeImages(images: Buffer[]): Promise<Float64Array[]>;
}

export interface CrossEncoder {
  readonly name: string;
  scorePairs(pairs: { text: string; image: Buffer }[]): Promise<number[]>;
}

/** Counter-based SHA-256 stream -> uniforms -> Box-Muller normals. */
function hashToUnitVector(material: string, dim: number): Float64Array {
  const normals = new Float64Array(dim);
  let produced = 0;
  let counter = 0;
  while (produced < dim) {
    const block = createHash('sha256')
      .update(`${material}\x1f${counter}`)
      .digest();
    counter += 1;
    for (let offset = 0; offset + 8 <= block.length && produced < dim; offset += 8) {
      const u1 = (block.readUInt32BE(offset) + 1) / 4294967297; // in (0, 1)
      const u2 = (block.readUInt32BE(offset + 4) + 1) / 4294967297;
      const radius = Math.sqrt(-2 * Math.log(u1));
      normals[produced++] = radius * Math.cos(2 * Math.PI * u2);
      if (produced < dim) normals[produced++] = radius * Math.sin(2 * Math.PI * u2);
    }
  }
  let norm = 0;
  for (const value of normals) norm += value * value;
  norm = Math.sqrt(norm);
  for (let i = 0; i < dim; i++) normals[i] /= norm;
  return normals;
}

export class StubEncoder implements TextImageEncoder, CrossEncoder {
  readonly name: string;

  constructor(
    readonly seed: number = 0,
    readonly dim: number = 64,
    readonly logitScale: number = 1.0,
  ) {
    this.name = `stub(seed=${seed},dim=${dim})`;
  }

  async encodeTexts(texts: string[]): Promise<Float64Array[]> {
    return texts.map(text =>
      hashToUnitVector(`${this.seed}\x1fT\x1f${text}`, this.dim),
    );
  }

  async encodeImages(images: Buffer[]): Promise<Float64Array[]> {
    return images.map(bytes => {
      const content = createHash('sha256').update(bytes).digest('hex');
      return hashToUnitVector(`${this.seed}\x1fI\x1f${content}`, this.dim);
    });
  }

  async scorePairs(pairs: { text: string; image: Buffer }[]): Promise<number[]> {
    return pairs.map(({ text, image }) => {
      const content = createHash('sha256').update(image).digest('hex');
      const digest = createHash('sha256')
        .update(`${this.seed}\x1fP\x1f${text}\x1f${content}`)
        .digest();
      // deterministic score in [-5, 5]
      return (digest.readUInt32BE(0) / 4294967295) * 10 - 5;
    });
  }
}

export async function loadEncoder(spec: string): Promise<TextImageEncoder> {
  const [kind, rest] = splitSpec(spec);
  if (kind === 'stub') {
    const params = parseParams(rest);
    return new StubEncoder(
      Number(params.seed ?? 0),
      Number(params.dim ?? 64),
      Number(params.scale ?? 1.0),
    );
  }
  if (kind === 'module') {
    const mod = await import(rest);
    if (typeof mod.default !== 'function') {
      throw new Error(`encoder module ${rest} must default-export a factory`);
    }
    return await mod.default();
  }
  throw new Error(`unknown encoder spec ${spec} (expected stub:... or module:...)`);
}

export async function loadCrossEncoder(spec: string): Promise<CrossEncoder> {
  const encoder = await loadEncoder(spec);
  const candidate = encoder as unknown as CrossEncoder;
  if (typeof candidate.scorePairs !== 'function') {
    throw new Error(`encoder ${encoder.name} does not support pair scoring`);
  }
  return candidate;
}

function splitSpec(spec: string): [string, string] {
  const colon = spec.indexOf(':');
  if (colon < 0) return [spec, ''];
  return [spec.slice(0, colon), spec.slice(colon + 1)];
}

function parseParams(text: string): Record<string, string> {
  const params: Record<string, string> = {};
  for (const part of text.split(',')) {
    if (!part) continue;
    const eq = part.indexOf('=');
    if (eq < 0) throw new Error(`bad encoder parameter ${part}`);
    params[part.slice(0, eq)] = part.slice(eq + 1);
  }
  return params;
}
