/**
 * Exporter CLI.
 *
 *   node dist/cli.js export-embeddings --data d.tsv --inventory inv.tsv \
 *     --images ./images --encoder stub:seed=7,dim=64,scale=2.5 --out out.store
 *
 *   node dist/cli.js export-pairs --data d.tsv --inventory inv.tsv \
 *     --images ./images --encoder module:./my-cross-encoder.mjs --out out.pairs
 *
 * Encoders: `stub:seed=..,dim=..,scale=..` (deterministic, for tests and dry
 * runs) or `module:<path>` whose default export is an async factory returning
 * the encoder object.
 */

import { exportEmbeddings, exportPairScores } from './export.js';
import { loadCrossEncoder, loadEncoder } from './encoders.js';

interface Flags {
  [name: string]: string;
}

function parseFlags(argv: string[], required: string[]): Flags {
  const flags: Flags = {};
  for (let i = 0; i < argv.length; i += 2) {
    const name = argv[i];
    if (!name.startsWith('--') || i + 1 >= argv.length) {
      throw new Error(`bad arguments near ${name}`);
    }
    flags[name.slice(2)] = argv[i + 1];
  }
  for (const name of required) {
    if (!(name in flags)) throw new Error(`missing required flag --${name}`);
  }
  return flags;
}

async function main() {
  const [command, ...rest] = process.argv.slice(2);
  const required = ['data', 'inventory', 'images', 'encoder', 'out'];
  if (command === 'export-embeddings') {
    const flags = parseFlags(rest, required);
    const encoder = await loadEncoder(flags.encoder);
    const manifest = await exportEmbeddings(encoder, {
      dataPath: flags.data,
      inventoryPath: flags.inventory,
      imagesRoot: flags.images,
      outPath: flags.out,
      manifestPath: flags.manifest,
      batchSize: flags['batch-size'] ? Number(flags['batch-size']) : undefined,
    });
    console.log(
      `wrote ${manifest.counts.texts} text + ${manifest.counts.images} image ` +
        `records to ${manifest.output} (sha256 ${manifest.checksum_sha256.slice(0, 12)}...)`,
    );
    if (manifest.skipped_images.length > 0) {
      console.error(`skipped ${manifest.skipped_images.length} unreadable image(s)`);
    }
  } else if (command === 'export-pairs') {
    const flags = parseFlags(rest, required);
    const encoder = await loadCrossEncoder(flags.encoder);
    const manifest = await exportPairScores(encoder, {
      dataPath: flags.data,
      inventoryPath: flags.inventory,
      imagesRoot: flags.images,
      outPath: flags.out,
      manifestPath: flags.manifest,
      batchSize: flags['batch-size'] ? Number(flags['batch-size']) : undefined,
    });
    console.log(`wrote ${manifest.counts.pairs} pair records to ${manifest.output}`);
  } else {
    console.error('usage: cli.js <export-embeddings|export-pairs> --data ... --inventory ... --images ... --encoder ... --out ...');
    process.exit(2);
  }
}

main().catch(error => {
  console.error(`error: ${error instanceof Error ? error.message : error}`);
  process.exit(1);
});
