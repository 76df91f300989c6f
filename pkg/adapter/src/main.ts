/** CLI entry: parse flags, load the model if any, then serve. */

import { AdapterConfig, serve } from './server.js';
import { loadCheckpoint, ModelLoadError } from './token_model.js';

const BACKENDS = ['noise_template', 'context_mixture', 'pretrained'] as const;

function parseArgs(argv: string[]): AdapterConfig {
  const config: AdapterConfig = {
    backend: 'noise_template',
    poolSize: 8,
    seed: 0,
    topK: 8,
    temperature: 1.0,
    device: 'cpu',
  };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const value = () => {
      const v = argv[++i];
      if (v === undefined) throw new Error(`${flag} needs a value`);
      return v;
    };
    switch (flag) {
      case '--backend': {
        const name = value();
        if (!(BACKENDS as readonly string[]).includes(name)) {
          throw new Error(`unknown backend ${name}; choose from ${BACKENDS.join(', ')}`);
        }
        config.backend = name as AdapterConfig['backend'];
        break;
      }
      case '--pool-size':
        config.poolSize = Number(value());
        break;
      case '--seed':
        config.seed = Number(value());
        break;
      case '--model-ref':
        config.modelRef = value();
        break;
      case '--top-k':
        config.topK = Number(value());
        break;
      case '--temperature':
        config.temperature = Number(value());
        break;
      case '--noise-scale':
        config.noiseScale = Number(value());
        break;
      case '--device':
        config.device = value();
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  if (!Number.isInteger(config.poolSize) || config.poolSize < 1) {
    throw new Error('--pool-size must be a positive integer');
  }
  return config;
}

async function main(): Promise<void> {
  let config: AdapterConfig;
  try {
    config = parseArgs(process.argv.slice(2));
    if (config.backend === 'pretrained') {
      if (!config.modelRef) throw new ModelLoadError('pretrained backend requires --model-ref');
      config.checkpoint = loadCheckpoint(config.modelRef);
    }
  } catch (err) {
    // fatal init problems exit nonzero before any handshake is written
    process.stderr.write(`adapter init failed: ${err}\n`);
    process.exit(2);
  }
  await serve(config);
  process.exit(0);
}

main();
