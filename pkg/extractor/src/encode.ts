/**
 * Batch encoding: image directories and class prompts into ZSEB matrices
 * plus JSON manifests the fusion engine loads directly.
 *
 * Dataset layout is one subdirectory per class (labels come from the
 * directory names); a flat directory of files yields rows without
 * labels. Rows follow sorted directory-listing order, which the emitted
 * manifest records file by file.
 */

import { readFileSync, readdirSync, statSync, writeFileSync } from 'node:fs'
import { join } from 'node:path'

import { Backbone } from './backbone.js'
import { EmbeddingMatrix, writeMatrix } from './zseb.js'

export interface CatalogEntry {
  name: string
  prompt: string
}

export interface EncodeResult {
  rows: number
  warnings: string[]
}

function listSorted(dir: string): string[] {
  return readdirSync(dir).sort()
}

function collectImages(datasetDir: string): { file: string; label: string | null }[] {
  const entries = listSorted(datasetDir)
  const subdirs = entries.filter((e) => statSync(join(datasetDir, e)).isDirectory())
  if (subdirs.length > 0) {
    const out: { file: string; label: string }[] = []
    for (const cls of subdirs) {
      for (const f of listSorted(join(datasetDir, cls))) {
        out.push({ file: join(datasetDir, cls, f), label: cls })
      }
    }
    return out
  }
  return entries.map((f) => ({ file: join(datasetDir, f), label: null }))
}

export async function encodeImages(
  datasetDir: string,
  backbone: Backbone,
  outMatrix: string,
  outManifest: string,
): Promise<EncodeResult> {
  const images = collectImages(datasetDir)
  const rows: Float32Array[] = []
  const files: string[] = []
  const labels: (string | null)[] = []
  const warnings: string[] = []
  for (const { file, label } of images) {
    let bytes: Buffer
    try {
      bytes = readFileSync(file)
    } catch (err) {
      warnings.push(`skipped unreadable image ${file}: ${String(err)}`)
      continue
    }
    rows.push(await backbone.encodeImage(bytes))
    files.push(file)
    labels.push(label)
  }
  if (rows.length === 0) {
    throw new Error(`no readable images under ${datasetDir}`)
  }
  const dim = backbone.spec.dim
  const data = new Float32Array(rows.length * dim)
  rows.forEach((r, i) => data.set(r, i * dim))
  const matrix: EmbeddingMatrix = {
    rows: rows.length,
    dim,
    data,
    normalized: true,
  }
  writeMatrix(matrix, outMatrix)
  const manifest = {
    backbone: backbone.spec,
    matrix: outMatrix,
    files,
    labels: labels.every((l) => l !== null) ? labels : null,
    warnings,
  }
  writeFileSync(outManifest, JSON.stringify(manifest, null, 2) + '\n')
  return { rows: rows.length, warnings }
}

export async function encodePrompts(
  catalogPath: string,
  backbone: Backbone,
  outMatrix: string,
): Promise<EncodeResult> {
  const catalog = JSON.parse(readFileSync(catalogPath, 'utf8')) as {
    classes: CatalogEntry[]
  }
  if (!catalog.classes?.length) {
    throw new Error(`${catalogPath}: catalog has no classes`)
  }
  const dim = backbone.spec.dim
  const data = new Float32Array(catalog.classes.length * dim)
  for (let i = 0; i < catalog.classes.length; i++) {
    const entry = catalog.classes[i]
    data.set(await backbone.encodeText(entry.prompt), i * dim)
  }
  writeMatrix(
    { rows: catalog.classes.length, dim, data, normalized: true },
    outMatrix,
  )
  return { rows: catalog.classes.length, warnings: [] }
}
