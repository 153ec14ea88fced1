/**
 * Reference-image generation client.
 *
 * Consumes a prompt-batch JSON produced by the engine's `prompts`
 * subcommand and POSTs each prompt to an image-generation endpoint.
 * Configuration comes from the environment:
 *
 *   IMAGE_API_URL  endpoint accepting {"prompt": ...} and returning
 *                  {"image_base64": ...}
 *   IMAGE_API_KEY  optional bearer token
 *
 * Without IMAGE_API_URL the run is a no-op with an explanatory message,
 * so offline builds never fail here. Failed prompts are retried once and
 * then recorded in the manifest; the manifest is written last and is
 * never left half-updated.
 */

import { mkdirSync, readFileSync, writeFileSync } from 'node:fs'
import { join } from 'node:path'

export interface PromptEntry {
  mode: string
  prompt: string
  class?: string
}

export interface GenerationManifest {
  endpoint: string
  images: Record<string, string[]>
  failures: { prompt: string; error: string }[]
}

export interface GenerateOptions {
  fetchImpl?: typeof fetch
  retries?: number
  log?: (msg: string) => void
}

async function requestImage(
  url: string,
  key: string | undefined,
  prompt: string,
  fetchImpl: typeof fetch,
): Promise<Buffer> {
  const headers: Record<string, string> = { 'Content-Type': 'application/json' }
  if (key) headers.Authorization = `Bearer ${key}`
  const res = await fetchImpl(url, {
    method: 'POST',
    headers,
    body: JSON.stringify({ prompt }),
  })
  if (!res.ok) {
    throw new Error(`request failed with status ${res.status}`)
  }
  const data = (await res.json()) as { image_base64?: string }
  if (!data.image_base64) {
    throw new Error('response missing image_base64')
  }
  return Buffer.from(data.image_base64, 'base64')
}

export async function runGenerationBatch(
  batchPath: string,
  outDir: string,
  options: GenerateOptions = {},
): Promise<GenerationManifest | null> {
  const log = options.log ?? console.error
  const url = process.env.IMAGE_API_URL
  if (!url) {
    log('IMAGE_API_URL is not set; skipping image generation (offline mode)')
    return null
  }
  const key = process.env.IMAGE_API_KEY
  const fetchImpl = options.fetchImpl ?? fetch
  const retries = options.retries ?? 1
  const batch = JSON.parse(readFileSync(batchPath, 'utf8')) as {
    prompts: PromptEntry[]
  }
  mkdirSync(outDir, { recursive: true })
  const manifest: GenerationManifest = { endpoint: url, images: {}, failures: [] }
  let counter = 0
  for (const entry of batch.prompts) {
    const cls = entry.class ?? 'unclassed'
    let lastError = ''
    let image: Buffer | null = null
    for (let attempt = 0; attempt <= retries; attempt++) {
      try {
        image = await requestImage(url, key, entry.prompt, fetchImpl)
        break
      } catch (err) {
        lastError = String(err)
      }
    }
    if (image === null) {
      manifest.failures.push({ prompt: entry.prompt, error: lastError })
      continue
    }
    const file = `${cls}_${counter++}.png`
    writeFileSync(join(outDir, file), image)
    ;(manifest.images[cls] ??= []).push(file)
  }
  writeFileSync(
    join(outDir, 'generation_manifest.json'),
    JSON.stringify(manifest, null, 2) + '\n',
  )
  return manifest
}
