import { describe, expect, it } from 'vitest';

import { formatPairs, formatStore, normalize } from '../src/store.js';

function vec(values: number[]): Float64Array {
  return Float64Array.from(values);
}

describe('store formatting', () => {
  it('writes the v1 header and tab-separated records', () => {
    const text = formatStore(2, 2.5, [
      { kind: 'T', key: 'ctx one', vector: vec([1, 0]) },
      { kind: 'I', key: 'img.0', vector: vec([0, 1]) },
    ]);
    const lines = text.trimEnd().split('\n');
    expect(lines[0]).toBe('#glossrank-store v1 dim=2 logit_scale=2.5');
    expect(lines[1]).toBe('T\tctx one\t1 0');
    expect(lines[2]).toBe('I\timg.0\t0 1');
  });

  it('rejects wrong dimensions and duplicate keys', () => {
    expect(() =>
      formatStore(3, 1, [{ kind: 'T', key: 'k', vector: vec([1, 0]) }]),
    ).toThrow(/dim=3/);
    expect(() =>
      formatStore(2, 1, [
        { kind: 'T', key: 'k', vector: vec([1, 0]) },
        { kind: 'T', key: 'k', vector: vec([0, 1]) },
      ]),
    ).toThrow(/duplicate/);
  });

  it('rejects keys containing tabs', () => {
    expect(() =>
      formatStore(2, 1, [{ kind: 'T', key: 'a\tb', vector: vec([1, 0]) }]),
    ).toThrow(/tab/);
  });

  it('serializes numbers as shortest round-trip decimals', () => {
    const third = normalize(vec([1, 1, 1]));
    const text = formatStore(3, 1, [{ kind: 'T', key: 'k', vector: third }]);
    const written = text.trimEnd().split('\n')[1].split('\t')[2].split(' ');
    for (const [i, token] of written.entries()) {
      expect(Number(token)).toBe(third[i]);
    }
  });
});

describe('vector normalization', () => {
  it('produces unit norm', () => {
    const v = normalize(vec([3, 4]));
    expect(Math.hypot(...v)).toBeCloseTo(1.0, 12);
  });

  it('rejects zero and non-finite vectors', () => {
    expect(() => normalize(vec([0, 0]))).toThrow(/zero/);
    expect(() => normalize(vec([1, Infinity]))).toThrow(/finite/);
  });
});

describe('pair formatting', () => {
  it('writes the pairs header and records', () => {
    const text = formatPairs([
      { textKey: 'ctx : def', imageKey: 'img.0', score: 1.5 },
    ]);
    expect(text).toBe('#glossrank-pairs v1\nctx : def\timg.0\t1.5\n');
  });

  it('rejects non-finite scores before writing', () => {
    expect(() =>
      formatPairs([{ textKey: 't', imageKey: 'i', score: NaN }]),
    ).toThrow(/non-finite/);
  });
});
