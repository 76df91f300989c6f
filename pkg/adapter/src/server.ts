/**
 * reachcast/1 server loop: one handshake line, then one JSON response line
 * per request line. Only protocol JSON goes to stdout; diagnostics go to
 * stderr. Closing stdin ends the process with exit code 0.
 */

import { createInterface } from 'node:readline';
import { contextMixture, noiseTemplate } from './backends.js';
import { ForecastRequest, PROTOCOL, validateRequest } from './protocol.js';
import { pretrainedForecast, TokenCheckpoint } from './token_model.js';

export interface AdapterConfig {
  backend: 'noise_template' | 'context_mixture' | 'pretrained';
  poolSize: number;
  seed: number;
  modelRef?: string;
  topK: number;
  temperature: number;
  noiseScale?: number;
  device: string; // hint only
  checkpoint?: TokenCheckpoint;
}

function emit(obj: unknown): void {
  process.stdout.write(JSON.stringify(obj) + '\n');
}

function handle(config: AdapterConfig, req: ForecastRequest): Record<string, number[][]> {
  const opts = { seed: config.seed, noiseScale: config.noiseScale };
  switch (config.backend) {
    case 'noise_template':
      return noiseTemplate(req, opts);
    case 'context_mixture':
      return contextMixture(req, opts);
    case 'pretrained':
      if (!config.checkpoint) throw new Error('pretrained backend has no checkpoint');
      return pretrainedForecast(config.checkpoint, req, {
        seed: config.seed,
        topK: config.topK,
        temperature: config.temperature,
      });
  }
}

export async function serve(config: AdapterConfig): Promise<void> {
  emit({ protocol: PROTOCOL, capabilities: [config.backend] });

  const lines = createInterface({ input: process.stdin });
  for await (const line of lines) {
    if (!line.trim()) continue;
    let msg: unknown;
    try {
      msg = JSON.parse(line);
    } catch {
      emit({ id: -1, error: 'request is not valid JSON' });
      continue;
    }
    const rawId = (msg as { id?: unknown })?.id;
    const id = Number.isInteger(rawId) ? (rawId as number) : -1;
    const problem = validateRequest(msg);
    if (problem !== null) {
      emit({ id, error: problem });
      continue;
    }
    try {
      emit({ id, pools: handle(config, msg as ForecastRequest) });
    } catch (err) {
      emit({ id, error: `forecast failed: ${err}` });
    }
  }
}
