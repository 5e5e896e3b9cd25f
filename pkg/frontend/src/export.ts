/** Dataset walking and the export job: image folder -> G2GEMB1 file.
 *
 * Labels come from sorted class-folder order under the split root; one
 * augmented view (random resized crop + horizontal flip, seeded per file)
 * accompanies every record. Unreadable files are skipped with a warning and
 * excluded from the record count.
 */

import * as fs from 'node:fs'
import * as path from 'node:path'

import { augment, decodeImage, resize, type Raster } from './image.js'
import { encodeEmbeddings, type EmbeddingRecord } from './format.js'
import { fnv1a, Rng } from './prng.js'
import { DEFAULT_BACKBONE, VitBackbone, type BackboneConfig } from './vit.js'

export interface ExportJob {
  dataRoot: string
  split: 'train' | 'test'
  outPath: string
  seed: number
  backbone?: BackboneConfig
  resizeTarget?: number
  log?: (msg: string) => void
}

export interface ExportSummary {
  outPath: string
  sidecarPath: string
  backboneName: string
  dH: number
  tokens: number
  written: number
  skipped: string[]
}

interface DatasetEntry {
  file: string
  relative: string
  label: number
  className: string
}

/** Class subfolders under `<root>/<split>` (or `<root>` if no split dir). */
export function walkDataset(dataRoot: string, split: string): DatasetEntry[] {
  const splitDir = path.join(dataRoot, split)
  const base = fs.existsSync(splitDir) && fs.statSync(splitDir).isDirectory()
    ? splitDir : dataRoot
  const classes = fs.readdirSync(base, { withFileTypes: true })
    .filter((e) => e.isDirectory())
    .map((e) => e.name)
    .sort()
  if (classes.length === 0) {
    throw new Error(`no class folders under ${base}`)
  }
  const entries: DatasetEntry[] = []
  classes.forEach((className, label) => {
    const dir = path.join(base, className)
    for (const name of fs.readdirSync(dir).sort()) {
      const file = path.join(dir, name)
      if (fs.statSync(file).isFile()) {
        entries.push({
          file,
          relative: path.join(className, name),
          label,
          className,
        })
      }
    }
  })
  return entries
}

export function runExport(job: ExportJob): ExportSummary {
  const log = job.log ?? ((msg: string) => console.warn(msg))
  const target = job.resizeTarget ?? 224
  const backbone = new VitBackbone(job.backbone ?? DEFAULT_BACKBONE)
  const entries = walkDataset(job.dataRoot, job.split)

  const records: EmbeddingRecord[] = []
  const skipped: string[] = []
  for (const entry of entries) {
    let raster: Raster
    try {
      raster = decodeImage(fs.readFileSync(entry.file), entry.file)
    } catch (err) {
      skipped.push(entry.relative)
      log(`warning: skipping unreadable image ${entry.relative}: ${String(err)}`)
      continue
    }
    const rng = new Rng((fnv1a(entry.relative) ^ job.seed) >>> 0)
    const base = resize(raster, target, target)
    const augmented = augment(raster, rng, target)
    records.push({
      label: entry.label,
      base: backbone.forward(base),
      augmented: backbone.forward(augmented),
    })
  }

  const buf = encodeEmbeddings({
    dH: backbone.dH,
    tokens: backbone.tokens,
    records,
  })
  fs.mkdirSync(path.dirname(path.resolve(job.outPath)), { recursive: true })
  fs.writeFileSync(job.outPath, buf)

  const sidecarPath = `${job.outPath}.meta.txt`
  const sidecar = [
    `backbone = ${backbone.name}`,
    `split = ${job.split}`,
    `seed = ${job.seed}`,
    `resize = ${target}x${target}`,
    `augmentation = random-resized-crop(0.70..0.95, ratio 3:4..4:3) + hflip(0.5)`,
    `d_h = ${backbone.dH}`,
    `L = ${backbone.tokens}`,
    `records = ${records.length}`,
    `skipped = ${skipped.length}`,
  ].join('\n') + '\n'
  fs.writeFileSync(sidecarPath, sidecar)

  return {
    outPath: job.outPath,
    sidecarPath,
    backboneName: backbone.name,
    dH: backbone.dH,
    tokens: backbone.tokens,
    written: records.length,
    skipped,
  }
}
