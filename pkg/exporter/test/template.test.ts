import { readFileSync } from 'node:fs';
import { join } from 'node:path';
import { describe, expect, it } from 'vitest';

import { buildJointText, normalizeLemma } from '../src/template.js';

const GOLDEN = join(__dirname, '..', '..', 'testdata', 'joint_text_golden.json');

describe('joint text template', () => {
  it('matches the shared golden vectors byte for byte', () => {
    const cases: { context: string; definition: string; joint: string }[] =
      JSON.parse(readFileSync(GOLDEN, 'utf-8'));
    expect(cases.length).toBeGreaterThan(0);
    for (const { context, definition, joint } of cases) {
      expect(buildJointText(context, definition)).toBe(joint);
    }
  });

  it('passes fields through verbatim', () => {
    expect(buildJointText('a  b', 'd')).toBe('a  b : d');
  });

  it('rejects empty fields', () => {
    expect(() => buildJointText('', 'd')).toThrow();
    expect(() => buildJointText('c', '')).toThrow();
  });
});

describe('lemma normalization', () => {
  it('lowercases and collapses whitespace', () => {
    expect(normalizeLemma('  Sea   Horse ')).toBe('sea horse');
    expect(normalizeLemma('Angora')).toBe('angora');
  });
});
