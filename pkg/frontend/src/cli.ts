/** CLI: export --data <dir> --split {train,test} --out <file> --seed <s>
 *
 * Optional backbone overrides: --width, --depth, --heads, --patch,
 * --image-size, --weight-seed.
 */

import { parseArgs } from 'node:util'

import { runExport } from './export.js'
import { DEFAULT_BACKBONE } from './vit.js'

function usage(): never {
  console.error(
    'usage: export --data <dir> --split {train,test} --out <file> --seed <s>\n' +
    '              [--width n] [--depth n] [--heads n] [--patch n]\n' +
    '              [--image-size n] [--weight-seed n]')
  process.exit(2)
}

export function main(argv: string[]): number {
  if (argv[0] !== 'export') usage()
  const { values } = parseArgs({
    args: argv.slice(1),
    options: {
      data: { type: 'string' },
      split: { type: 'string' },
      out: { type: 'string' },
      seed: { type: 'string', default: '0' },
      width: { type: 'string' },
      depth: { type: 'string' },
      heads: { type: 'string' },
      patch: { type: 'string' },
      'image-size': { type: 'string' },
      'weight-seed': { type: 'string' },
    },
  })
  if (!values.data || !values.out || !values.split) usage()
  if (values.split !== 'train' && values.split !== 'test') usage()

  const backbone = { ...DEFAULT_BACKBONE }
  if (values.width) backbone.width = parseInt(values.width, 10)
  if (values.depth) backbone.depth = parseInt(values.depth, 10)
  if (values.heads) backbone.heads = parseInt(values.heads, 10)
  if (values.patch) backbone.patch = parseInt(values.patch, 10)
  if (values['image-size']) backbone.imageSize = parseInt(values['image-size'], 10)
  if (values['weight-seed']) backbone.weightSeed = parseInt(values['weight-seed'], 10)

  const summary = runExport({
    dataRoot: values.data,
    split: values.split,
    outPath: values.out,
    seed: parseInt(values.seed ?? '0', 10),
    backbone,
    resizeTarget: backbone.imageSize,
  })
  console.log(
    `wrote ${summary.written} records (d_h=${summary.dH}, L=${summary.tokens}) ` +
    `to ${summary.outPath}\nbackbone ${summary.backboneName}; ` +
    `${summary.skipped.length} skipped; sidecar ${summary.sidecarPath}`)
  return 0
}

const invokedDirectly = process.argv[1] && (
  process.argv[1].endsWith('cli.js') || process.argv[1].endsWith('cli.ts'))
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)))
}
