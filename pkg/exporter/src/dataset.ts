/**
 * Readers for the dataset TSV (`id  target  context  img1..imgK`) and the
 * sense-inventory TSV (`lemma  pos  definition`, `#` comments allowed).
 */

import { readFileSync } from 'node:fs';
import { normalizeLemma } from './template.js';

export interface DatasetInstance {
  id: string;
  target: string;
  context: string;
  candidates: string[];
}

export function readDataset(path: string): DatasetInstance[] {
  const instances: DatasetInstance[] = [];
  const lines = readFileSync(path, 'utf-8').split('\n');
  lines.forEach((line, index) => {
    if (!line.trim()) return;
    const fields = line.split('\t');
    if (fields.length < 4) {
      throw new Error(
        `${path}:${index + 1}: expected id, target, context and at least one candidate`,
      );
    }
    const [id, target, context, ...candidates] = fields;
    if (!id || !target || !context) {
      throw new Error(`${path}:${index + 1}: empty id/target/context`);
    }
    instances.push({ id, target, context, candidates });
  });
  if (instances.length === 0) throw new Error(`${path}: empty dataset`);
  return instances;
}

/** Definitions per normalized lemma, preserving file order. */
export function readInventory(path: string): Map<string, string[]> {
  const definitions = new Map<string, string[]>();
  const lines = readFileSync(path, 'utf-8').split('\n');
  lines.forEach((line, index) => {
    if (!line.trim() || line.startsWith('#')) return;
    const fields = line.split('\t');
    if (fields.length !== 3) {
      throw new Error(`${path}:${index + 1}: expected 3 tab-separated fields`);
    }
    const [lemma, , definition] = fields;
    if (!definition.trim()) {
      throw new Error(`${path}:${index + 1}: empty definition`);
    }
    const key = normalizeLemma(lemma);
    const list = definitions.get(key) ?? [];
    list.push(definition.trim());
    definitions.set(key, list);
  });
  return definitions;
}
