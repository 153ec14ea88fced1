#!/usr/bin/env node
/**
 * Extractor CLI.
 *
 *   encode-images   --dataset DIR --backbone NAME [--dim N]
 *                   --out-matrix F --out-manifest F
 *   encode-prompts  --catalog F --backbone NAME [--dim N] --out-matrix F
 *   generate        --batch F --out DIR
 */

import { parseArgs } from 'node:util'

import { loadBackbone } from './backbone.js'
import { encodeImages, encodePrompts } from './encode.js'
import { runGenerationBatch } from './generate.js'

function usage(): never {
  console.error(
    'usage: zsfuse-extract <encode-images|encode-prompts|generate> [options]',
  )
  process.exit(1)
}

async function main(): Promise<number> {
  const [command, ...rest] = process.argv.slice(2)
  if (!command) usage()
  const { values } = parseArgs({
    args: rest,
    options: {
      dataset: { type: 'string' },
      catalog: { type: 'string' },
      backbone: { type: 'string' },
      dim: { type: 'string' },
      'out-matrix': { type: 'string' },
      'out-manifest': { type: 'string' },
      batch: { type: 'string' },
      out: { type: 'string' },
    },
  })
  const dim = values.dim ? Number(values.dim) : undefined

  if (command === 'encode-images') {
    if (!values.dataset || !values.backbone || !values['out-matrix'] || !values['out-manifest']) {
      usage()
    }
    const backbone = loadBackbone(values.backbone, dim)
    const result = await encodeImages(
      values.dataset,
      backbone,
      values['out-matrix'],
      values['out-manifest'],
    )
    console.error(`encoded ${result.rows} images (${result.warnings.length} warnings)`)
    for (const w of result.warnings) console.error(`warning: ${w}`)
    return 0
  }
  if (command === 'encode-prompts') {
    if (!values.catalog || !values.backbone || !values['out-matrix']) usage()
    const backbone = loadBackbone(values.backbone, dim)
    const result = await encodePrompts(values.catalog, backbone, values['out-matrix'])
    console.error(`encoded ${result.rows} class prompts`)
    return 0
  }
  if (command === 'generate') {
    if (!values.batch || !values.out) usage()
    const manifest = await runGenerationBatch(values.batch, values.out)
    if (manifest) {
      const total = Object.values(manifest.images).reduce((a, v) => a + v.length, 0)
      console.error(`generated ${total} images, ${manifest.failures.length} failures`)
    }
    return 0
  }
  usage()
}

main().then(
  (code) => process.exit(code),
  (err) => {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`)
    process.exit(2)
  },
)
