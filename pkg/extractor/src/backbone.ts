/**
 * Pluggable encoders. Every emitted bundle records the exact checkpoint
 * identifier so downstream reports are provenance-stamped.
 *
 * The built-in "stub" backbones are deterministic hash-projection
 * encoders for offline development and integration testing: the SHA-256
 * of the input seeds a PRNG that draws a unit-norm embedding, so the
 * same bytes always map to the same row. Real contrastive / self-distilled
 * checkpoints plug in behind the same interface; which checkpoint
 * variants to use is a deployment decision and must be named in the
 * BackboneSpec.
 */

import { createHash } from 'node:crypto'

export interface BackboneSpec {
  /** backbone id, e.g. "clip" or "dino" */
  id: string
  /** exact checkpoint identifier recorded into manifests */
  checkpoint: string
  dim: number
  preprocessing: string
}

export interface Backbone {
  spec: BackboneSpec
  encodeImage(bytes: Buffer): Promise<Float32Array>
  encodeText(text: string): Promise<Float32Array>
}

/** splitmix64-style generator over the digest words */
function* digestStream(seed: Buffer): Generator<number> {
  let counter = 0
  for (;;) {
    const h = createHash('sha256')
    h.update(seed)
    h.update(String(counter++))
    const d = h.digest()
    for (let off = 0; off + 8 <= d.length; off += 8) {
      // two u32 -> uniform in (0, 1)
      yield (d.readUInt32LE(off) + 0.5) / 4294967296
      yield (d.readUInt32LE(off + 4) + 0.5) / 4294967296
    }
  }
}

function hashEmbedding(seed: Buffer, dim: number): Float32Array {
  const stream = digestStream(seed)
  const out = new Float32Array(dim)
  for (let i = 0; i < dim; i += 2) {
    // Box-Muller from two uniforms
    const u1 = stream.next().value as number
    const u2 = stream.next().value as number
    const r = Math.sqrt(-2 * Math.log(u1))
    out[i] = r * Math.cos(2 * Math.PI * u2)
    if (i + 1 < dim) out[i + 1] = r * Math.sin(2 * Math.PI * u2)
  }
  let sq = 0
  for (let i = 0; i < dim; i++) sq += out[i] * out[i]
  const inv = 1 / Math.sqrt(sq)
  for (let i = 0; i < dim; i++) out[i] *= inv
  return out
}

export function stubBackbone(id: string, dim = 64): Backbone {
  const spec: BackboneSpec = {
    id,
    checkpoint: `stub-sha256-projection-d${dim}`,
    dim,
    preprocessing: 'none (raw bytes hashed)',
  }
  return {
    spec,
    async encodeImage(bytes: Buffer): Promise<Float32Array> {
      return hashEmbedding(bytes, dim)
    },
    async encodeText(text: string): Promise<Float32Array> {
      return hashEmbedding(Buffer.from(`text:${text}`, 'utf8'), dim)
    },
  }
}

const REGISTRY: Record<string, (dim?: number) => Backbone> = {
  'stub-clip': (dim) => stubBackbone('clip', dim),
  'stub-dino': (dim) => stubBackbone('dino', dim),
}

export function loadBackbone(name: string, dim?: number): Backbone {
  const factory = REGISTRY[name]
  if (!factory) {
    throw new Error(
      `unknown backbone ${JSON.stringify(name)}; available: ${Object.keys(REGISTRY).join(', ')}`,
    )
  }
  return factory(dim)
}
