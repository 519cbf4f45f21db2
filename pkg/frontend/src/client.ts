import * as net from "net";

import {
  FrameParser,
  ObsSpec,
  STATUS_OK,
  decodeObservation,
  encodeClose,
  encodeObsSpec,
  encodeReset,
  encodeStep,
  frame,
} from "./protocol";

export interface StepResult {
  obs: Float64Array;
  done: boolean;
}

/** Thrown when the server answers with an error status; the session stays usable. */
export class EnvError extends Error {}

/**
 * Promise-based client for the step/reset environment socket.
 *
 * The server handles one request at a time, so calls are serialized through
 * an internal queue: it is safe to issue reset/step/obsSpec without awaiting
 * the previous call first.
 */
export class EnvClient {
  private socket: net.Socket;
  private parser = new FrameParser();
  private pending: Array<{
    resolve: (payload: Buffer) => void;
    reject: (err: Error) => void;
  }> = [];
  private queue: Promise<unknown> = Promise.resolve();

  private constructor(socket: net.Socket) {
    this.socket = socket;
    socket.on("data", (chunk) => {
      for (const payload of this.parser.push(chunk)) {
        const waiter = this.pending.shift();
        if (waiter) waiter.resolve(payload);
      }
    });
    socket.on("error", (err) => this.failAll(err));
    socket.on("close", () => this.failAll(new Error("connection closed")));
  }

  static connect(host: string, port: number, timeoutMs = 10000): Promise<EnvClient> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port });
      const timer = setTimeout(() => {
        socket.destroy();
        reject(new Error(`connect timeout after ${timeoutMs} ms`));
      }, timeoutMs);
      socket.once("connect", () => {
        clearTimeout(timer);
        resolve(new EnvClient(socket));
      });
      socket.once("error", (err) => {
        clearTimeout(timer);
        reject(err);
      });
    });
  }

  async reset(seed: number | bigint): Promise<Float64Array> {
    const payload = await this.request(encodeReset(BigInt(seed)));
    return decodeObservation(payload, 1);
  }

  async step(actions: number[]): Promise<StepResult> {
    const payload = await this.request(encodeStep(actions));
    return { obs: decodeObservation(payload, 2), done: payload[1] !== 0 };
  }

  async obsSpec(): Promise<ObsSpec> {
    const payload = await this.request(encodeObsSpec());
    return JSON.parse(payload.subarray(1).toString("utf8")) as ObsSpec;
  }

  async close(): Promise<void> {
    try {
      await this.request(encodeClose());
    } finally {
      this.socket.destroy();
    }
  }

  private request(payload: Buffer): Promise<Buffer> {
    const run = this.queue.then(
      () =>
        new Promise<Buffer>((resolve, reject) => {
          this.pending.push({ resolve, reject });
          this.socket.write(frame(payload));
        }),
    );
    // keep the queue alive even when a request is rejected
    this.queue = run.catch(() => undefined);
    return run.then((resp) => {
      if (resp.length === 0 || resp[0] !== STATUS_OK) {
        throw new EnvError(resp.subarray(1).toString("utf8") || "empty response");
      }
      return resp;
    });
  }

  private failAll(err: Error): void {
    const waiting = this.pending.splice(0);
    for (const waiter of waiting) waiter.reject(err);
  }
}
