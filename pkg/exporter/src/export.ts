/**
 * Export pipelines: run an encoder over a dataset and emit the engine's
 * store / pair-score files plus a manifest.
 *
 * Text side: one record per unique context and per unique joint text
 * (template applied to every sense definition of the instance's target).
 * Image side: one record per unique candidate image, loaded from the image
 * root by key. Unreadable images are skipped and reported in the manifest;
 * a missing definition text is a hard error, because pair ranking cannot
 * tolerate holes.
 */

import { createHash } from 'node:crypto';
import { readFileSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';

import { DatasetInstance, readDataset, readInventory } from './dataset.js';
import { CrossEncoder, TextImageEncoder } from './encoders.js';
import { formatPairs, formatStore, normalize, PairRecord, StoreRecord } from './store.js';
import { buildJointText, normalizeLemma } from './template.js';

export interface ExportManifest {
  model: string;
  /** absent for pair-score manifests: a cross-encoder has no embedding dim */
  dim?: number;
  logit_scale?: number;
  dataset: string;
  counts: { texts: number; images: number; pairs?: number };
  skipped_images: string[];
  checksum_sha256: string;
  output: string;
}

export interface ExportOptions {
  dataPath: string;
  inventoryPath: string;
  imagesRoot: string;
  outPath: string;
  manifestPath?: string;
  batchSize?: number;
}

/** Unique contexts and joint texts in first-seen order. */
export function gatherTexts(
  instances: DatasetInstance[],
  definitions: Map<string, string[]>,
): string[] {
  const seen = new Set<string>();
  const texts: string[] = [];
  const push = (text: string) => {
    if (!seen.has(text)) {
      seen.add(text);
      texts.push(text);
    }
  };
  for (const instance of instances) {
    push(instance.context);
    const defs = definitions.get(normalizeLemma(instance.target)) ?? [];
    for (const def of defs) push(buildJointText(instance.context, def));
  }
  return texts;
}

export function gatherImageKeys(instances: DatasetInstance[]): string[] {
  const seen = new Set<string>();
  const keys: string[] = [];
  for (const instance of instances) {
    for (const key of instance.candidates) {
      if (!seen.has(key)) {
        seen.add(key);
        keys.push(key);
      }
    }
  }
  return keys;
}

function readImages(
  imagesRoot: string,
  keys: string[],
): { loaded: { key: string; bytes: Buffer }[]; skipped: string[] } {
  const loaded: { key: string; bytes: Buffer }[] = [];
  const skipped: string[] = [];
  for (const key of keys) {
    try {
      loaded.push({ key, bytes: readFileSync(join(imagesRoot, key)) });
    } catch {
      skipped.push(key);
    }
  }
  return { loaded, skipped };
}

async function inBatches<T, R>(
  items: T[],
  batchSize: number,
  run: (batch: T[]) => Promise<R[]>,
): Promise<R[]> {
  const out: R[] = [];
  for (let start = 0; start < items.length; start += batchSize) {
    const batch = items.slice(start, start + batchSize);
    const results = await run(batch);
    if (results.length !== batch.length) {
      throw new Error(
        `encoder returned ${results.length} results for a batch of ${batch.length}`,
      );
    }
    out.push(...results);
  }
  return out;
}

function writeManifest(manifest: ExportManifest, path: string | undefined, outPath: string) {
  const target = path ?? `${outPath}.manifest.json`;
  writeFileSync(target, JSON.stringify(manifest, null, 2) + '\n');
}

export async function exportEmbeddings(
  encoder: TextImageEncoder,
  options: ExportOptions,
): Promise<ExportManifest> {
  const instances = readDataset(options.dataPath);
  const definitions = readInventory(options.inventoryPath);
  const batchSize = options.batchSize ?? 32;

  const texts = gatherTexts(instances, definitions);
  const imageKeys = gatherImageKeys(instances);
  const { loaded, skipped } = readImages(options.imagesRoot, imageKeys);

  const textVectors = await inBatches(texts, batchSize, batch =>
    encoder.encodeTexts(batch),
  );
  const imageVectors = await inBatches(loaded, batchSize, batch =>
    encoder.encodeImages(batch.map(item => item.bytes)),
  );

  const records: StoreRecord[] = [];
  texts.forEach((key, i) => {
    records.push({ kind: 'T', key, vector: normalize(textVectors[i]) });
  });
  loaded.forEach((item, i) => {
    records.push({ kind: 'I', key: item.key, vector: normalize(imageVectors[i]) });
  });

  const content = formatStore(encoder.dim, encoder.logitScale, records);
  writeFileSync(options.outPath, content);

  const manifest: ExportManifest = {
    model: encoder.name,
    dim: encoder.dim,
    logit_scale: encoder.logitScale,
    dataset: options.dataPath,
    counts: { texts: texts.length, images: loaded.length },
    skipped_images: skipped,
    checksum_sha256: createHash('sha256').update(content).digest('hex'),
    output: options.outPath,
  };
  writeManifest(manifest, options.manifestPath, options.outPath);
  return manifest;
}

export async function exportPairScores(
  encoder: CrossEncoder,
  options: ExportOptions,
): Promise<ExportManifest> {
  const instances = readDataset(options.dataPath);
  const definitions = readInventory(options.inventoryPath);
  const batchSize = options.batchSize ?? 32;

  // pairs need every definition text resolvable up front
  for (const instance of instances) {
    if (!definitions.has(normalizeLemma(instance.target))) {
      throw new Error(
        `no definitions for target ${JSON.stringify(instance.target)} ` +
          `(instance ${instance.id}); pair export cannot skip texts`,
      );
    }
  }

  const imageKeys = gatherImageKeys(instances);
  const { loaded, skipped } = readImages(options.imagesRoot, imageKeys);
  const bytesByKey = new Map(loaded.map(item => [item.key, item.bytes]));

  const wanted: { textKey: string; imageKey: string }[] = [];
  for (const instance of instances) {
    const defs = definitions.get(normalizeLemma(instance.target)) ?? [];
    const textKeys = [
      instance.context,
      ...defs.map(def => buildJointText(instance.context, def)),
    ];
    for (const textKey of textKeys) {
      for (const imageKey of instance.candidates) {
        if (bytesByKey.has(imageKey)) wanted.push({ textKey, imageKey });
      }
    }
  }

  const scores = await inBatches(wanted, batchSize, batch =>
    encoder.scorePairs(
      batch.map(({ textKey, imageKey }) => ({
        text: textKey,
        image: bytesByKey.get(imageKey)!,
      })),
    ),
  );

  const records: PairRecord[] = wanted.map((pair, i) => ({
    textKey: pair.textKey,
    imageKey: pair.imageKey,
    score: scores[i],
  }));
  const content = formatPairs(records);
  writeFileSync(options.outPath, content);

  const manifest: ExportManifest = {
    model: encoder.name,
    dataset: options.dataPath,
    counts: { texts: 0, images: loaded.length, pairs: records.length },
    skipped_images: skipped,
    checksum_sha256: createHash('sha256').update(content).digest('hex'),
    output: options.outPath,
  };
  writeManifest(manifest, options.manifestPath, options.outPath);
  return manifest;
}
