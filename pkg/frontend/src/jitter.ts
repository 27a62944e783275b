// Jitter buffer between the socket and the audio callback. Targets 3-6
// queued blocks; a sequence gap is concealed with silence (one silent block
// per missing frame), and anything worse reprimes the buffer from scratch.

export interface JitterStats {
  glitches: number;   // gaps concealed or underruns hit
  lateDrops: number;  // frames that arrived behind the playhead
  overflowDrops: number;
  primed: boolean;
}

const SEQ_SPAN = 0x1_0000_0000; // sequence numbers wrap at 2^32

function seqDelta(from: number, to: number): number {
  // signed distance from -> to on the wrapping sequence circle
  let d = (to - from) % SEQ_SPAN;
  if (d < 0) d += SEQ_SPAN;
  return d >= SEQ_SPAN / 2 ? d - SEQ_SPAN : d;
}

export class JitterBuffer {
  readonly blockSize: number;
  private readonly minBlocks: number;
  private readonly maxBlocks: number;
  private queue: Float32Array[] = [];
  private expectedSeq: number | null = null;
  private priming = true;
  private glitches = 0;
  private lateDrops = 0;
  private overflowDrops = 0;

  constructor(blockSize = 512, minBlocks = 3, maxBlocks = 6) {
    if (minBlocks < 1 || maxBlocks < minBlocks) throw new Error("bad buffer bounds");
    this.blockSize = blockSize;
    this.minBlocks = minBlocks;
    this.maxBlocks = maxBlocks;
  }

  push(seq: number, samples: Float32Array): void {
    if (samples.length !== this.blockSize) {
      // tolerate odd block sizes rather than desync: pad or trim
      const fixed = new Float32Array(this.blockSize);
      fixed.set(samples.subarray(0, this.blockSize));
      samples = fixed;
    }
    if (this.expectedSeq === null) {
      this.expectedSeq = seq;
    }
    const delta = seqDelta(this.expectedSeq, seq);
    if (delta < 0) {
      this.lateDrops++;
      return;
    }
    if (delta > 0) {
      this.glitches++;
      if (delta > this.maxBlocks) {
        // too far ahead to conceal: restart from this frame
        this.queue = [];
        this.priming = true;
      } else {
        for (let i = 0; i < delta; i++) this.queue.push(new Float32Array(this.blockSize));
      }
    }
    this.queue.push(samples);
    this.expectedSeq = (seq + 1) % SEQ_SPAN;
    while (this.queue.length > this.maxBlocks) {
      this.queue.shift();
      this.overflowDrops++;
    }
  }

  pull(): Float32Array {
    if (this.priming) {
      if (this.queue.length >= this.minBlocks) {
        this.priming = false;
      } else {
        return new Float32Array(this.blockSize);
      }
    }
    const block = this.queue.shift();
    if (block === undefined) {
      this.glitches++;
      this.priming = true;
      return new Float32Array(this.blockSize);
    }
    return block;
  }

  latencySeconds(sampleRate: number): number {
    return (this.queue.length * this.blockSize) / sampleRate;
  }

  stats(): JitterStats {
    return {
      glitches: this.glitches,
      lateDrops: this.lateDrops,
      overflowDrops: this.overflowDrops,
      primed: !this.priming,
    };
  }

  reset(): void {
    this.queue = [];
    this.expectedSeq = null;
    this.priming = true;
  }
}
