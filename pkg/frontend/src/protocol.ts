/**
 * Wire protocol for the marinesim environment server.
 *
 * Every frame is a 4-byte little-endian payload length followed by the
 * payload. Requests start with an opcode byte; responses with a status byte
 * (0 ok, 1 error). STEP responses carry an extra done byte before the
 * observation. Observations are little-endian float64 arrays laid out
 * exactly as published by OBS_SPEC.
 */

export const OP_RESET = 1;
export const OP_STEP = 2;
export const OP_OBS_SPEC = 3;
export const OP_CLOSE = 4;

export const STATUS_OK = 0;
export const STATUS_ERROR = 1;

export interface ObsField {
  name: string;
  size: number;
}

export interface ObsSpec {
  fields: ObsField[];
  action_size: number;
  dtype: string;
  byte_order: string;
}

export function encodeReset(seed: bigint): Buffer {
  const buf = Buffer.alloc(9);
  buf.writeUInt8(OP_RESET, 0);
  buf.writeBigUInt64LE(seed, 1);
  return buf;
}

export function encodeStep(actions: number[]): Buffer {
  const buf = Buffer.alloc(5 + 8 * actions.length);
  buf.writeUInt8(OP_STEP, 0);
  buf.writeUInt32LE(actions.length, 1);
  actions.forEach((a, i) => buf.writeDoubleLE(a, 5 + 8 * i));
  return buf;
}

export function encodeObsSpec(): Buffer {
  return Buffer.from([OP_OBS_SPEC]);
}

export function encodeClose(): Buffer {
  return Buffer.from([OP_CLOSE]);
}

export function frame(payload: Buffer): Buffer {
  const header = Buffer.alloc(4);
  header.writeUInt32LE(payload.length, 0);
  return Buffer.concat([header, payload]);
}

export function decodeObservation(payload: Buffer, offset: number): Float64Array {
  const n = (payload.length - offset) / 8;
  const obs = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    obs[i] = payload.readDoubleLE(offset + 8 * i);
  }
  return obs;
}

/** Incremental splitter for length-prefixed frames arriving over a stream. */
export class FrameParser {
  private buffer = Buffer.alloc(0);

  push(chunk: Buffer): Buffer[] {
    this.buffer = Buffer.concat([this.buffer, chunk]);
    const frames: Buffer[] = [];
    while (this.buffer.length >= 4) {
      const length = this.buffer.readUInt32LE(0);
      if (this.buffer.length < 4 + length) break;
      frames.push(this.buffer.subarray(4, 4 + length));
      this.buffer = this.buffer.subarray(4 + length);
    }
    return frames;
  }
}
