#!/usr/bin/env node
/**
 * detector-bridge --model PATH --image PATH --classes capacitor,resistor,inductor,ic
 *                 [--out PATH] [--input-size N]
 *
 * Runs the detector on one image and emits the detections JSON document to
 * stdout (or --out). Output is raw detector output in original-image pixel
 * coordinates: feed it to the pipeline's `nms` command before inspecting.
 */

import { readFile, writeFile } from 'node:fs/promises';
import process from 'node:process';
import { pathToFileURL } from 'node:url';

import { decodeImage } from './image.js';
import { runDetector } from './infer.js';
import { resolveClassNames } from './schema.js';

const USAGE =
  'usage: detector-bridge --model PATH --image PATH ' +
  '--classes capacitor,resistor,inductor,ic [--out PATH] [--input-size N]';

interface CliArgs {
  model: string;
  image: string;
  classes: string[];
  out?: string;
  inputSize?: number;
}

export function parseArgs(argv: string[]): CliArgs {
  const values = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith('--')) {
      throw new Error(`unexpected argument ${JSON.stringify(arg)}\n${USAGE}`);
    }
    const key = arg.slice(2);
    const value = argv[++i];
    if (value === undefined) {
      throw new Error(`missing value for --${key}\n${USAGE}`);
    }
    values.set(key, value);
  }
  for (const required of ['model', 'image', 'classes']) {
    if (!values.has(required)) {
      throw new Error(`missing --${required}\n${USAGE}`);
    }
  }
  const known = new Set(['model', 'image', 'classes', 'out', 'input-size']);
  for (const key of values.keys()) {
    if (!known.has(key)) {
      throw new Error(`unknown flag --${key}\n${USAGE}`);
    }
  }
  const args: CliArgs = {
    model: values.get('model')!,
    image: values.get('image')!,
    classes: values.get('classes')!.split(',').map((s) => s.trim()).filter(Boolean),
  };
  if (values.has('out')) {
    args.out = values.get('out')!;
  }
  if (values.has('input-size')) {
    const n = Number(values.get('input-size'));
    if (!Number.isInteger(n) || n < 1) {
      throw new Error(`--input-size must be a positive integer, got ${values.get('input-size')}`);
    }
    args.inputSize = n;
  }
  return args;
}

export async function main(argv: string[]): Promise<number> {
  let args: CliArgs;
  try {
    args = parseArgs(argv);
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 2;
  }
  try {
    const classNames = resolveClassNames(args.classes);
    const image = decodeImage(await readFile(args.image));
    const document = await runDetector(image, {
      modelPath: args.model,
      classNames,
      inputSize: args.inputSize,
    });
    const text = JSON.stringify(document, null, 2) + '\n';
    if (args.out) {
      await writeFile(args.out, text, 'utf8');
    } else {
      process.stdout.write(text);
    }
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
