// Feeds the audio callback from the jitter buffer. The callback's buffer
// size need not match the stream's block size, so keep a remainder.

import { JitterBuffer } from "./jitter";

export class AudioPump {
  private readonly jitter: JitterBuffer;
  private remainder: Float32Array = new Float32Array(0);
  samplesOut = 0;

  constructor(jitter: JitterBuffer) {
    this.jitter = jitter;
  }

  fill(out: Float32Array): void {
    let offset = 0;
    while (offset < out.length) {
      if (this.remainder.length === 0) this.remainder = this.jitter.pull();
      const take = Math.min(this.remainder.length, out.length - offset);
      out.set(this.remainder.subarray(0, take), offset);
      this.remainder = this.remainder.subarray(take);
      offset += take;
    }
    this.samplesOut += out.length;
  }
}
