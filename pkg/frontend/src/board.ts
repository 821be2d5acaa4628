// Live attendance board: initial report fetch, stream-applied updates,
// and a full re-sync whenever the stream reconnects.

import type { ApiClient } from "./api";
import { StreamSubscription } from "./sse";
import { applyStreamMessage, fromReport, withConnection, type BoardState } from "./store";
import type { ConnectionState, StreamMessage } from "./types";

export class LiveBoard {
  private state: BoardState | null = null;
  private sub: StreamSubscription | null = null;

  constructor(
    private api: ApiClient,
    private sessionId: string,
    private onChange: (state: BoardState) => void,
  ) {}

  current(): BoardState | null {
    return this.state;
  }

  private push(state: BoardState): void {
    this.state = state;
    this.onChange(state);
  }

  private setConnection(connection: ConnectionState): void {
    if (this.state) this.push(withConnection(this.state, connection));
  }

  async start(): Promise<void> {
    this.push(fromReport(await this.api.report(this.sessionId), "connecting"));
    this.sub = new StreamSubscription(
      this.api.streamUrl(this.sessionId),
      {
        onEvent: (ev) => {
          if (ev.event !== "attendance") return;
          const msg = JSON.parse(ev.data) as StreamMessage;
          if (this.state) this.push(applyStreamMessage(this.state, msg));
        },
        onReconnect: () => void this.resync(),
        onStateChange: (s) => this.setConnection(s),
      },
      this.api.streamHeaders(),
    );
    this.sub.start();
  }

  /** Replace local state with a fresh report (catch up on missed events). */
  async resync(): Promise<void> {
    const report = await this.api.report(this.sessionId);
    this.push(fromReport(report, this.state?.connection ?? "live"));
  }

  stop(): void {
    this.sub?.stop();
  }

  /** Test hook: drop the stream as if the network failed. */
  killStream(): void {
    this.sub?.kill();
  }
}
