// Server-sent-events client on fetch + ReadableStream, so the same code
// runs in browsers and Node. Reconnects with backoff until stopped and
// reports connection state to the owner (the board re-syncs on reconnect).

export interface SseEvent {
  event: string;
  data: string;
}

export interface SubscriptionHandlers {
  onEvent: (ev: SseEvent) => void;
  onConnect?: () => void;
  onReconnect?: () => void;
  onStateChange?: (state: "connecting" | "live" | "reconnecting" | "stopped") => void;
}

export function parseSseChunks(buffer: string): { events: SseEvent[]; rest: string } {
  const events: SseEvent[] = [];
  const blocks = buffer.split(/\n\n/);
  const rest = blocks.pop() ?? "";
  for (const block of blocks) {
    let event = "message";
    const data: string[] = [];
    for (const line of block.split("\n")) {
      if (line.startsWith(":")) continue; // heartbeat comment
      if (line.startsWith("event:")) event = line.slice(6).trim();
      else if (line.startsWith("data:")) data.push(line.slice(5).trim());
    }
    if (data.length > 0) events.push({ event, data: data.join("\n") });
  }
  return { events, rest };
}

export class StreamSubscription {
  private stopped = false;
  private attempt = 0;
  private everConnected = false;
  private current: AbortController | null = null;

  constructor(
    private url: string,
    private handlers: SubscriptionHandlers,
    private headers: Record<string, string> = {},
    private retryDelayMs = 250,
  ) {}

  start(): void {
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    this.current?.abort();
    this.handlers.onStateChange?.("stopped");
  }

  /** Test hook: sever the in-flight connection as if the network dropped. */
  kill(): void {
    this.current?.abort();
  }

  private async loop(): Promise<void> {
    while (!this.stopped) {
      this.handlers.onStateChange?.(this.everConnected ? "reconnecting" : "connecting");
      this.current = new AbortController();
      try {
        const resp = await fetch(this.url, {
          headers: { Accept: "text/event-stream", ...this.headers },
          signal: this.current.signal,
        });
        if (!resp.ok || !resp.body) throw new Error(`stream HTTP ${resp.status}`);
        this.attempt = 0;
        if (this.everConnected) this.handlers.onReconnect?.();
        else this.handlers.onConnect?.();
        this.everConnected = true;
        this.handlers.onStateChange?.("live");

        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        let buffer = "";
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          buffer += decoder.decode(value, { stream: true });
          const { events, rest } = parseSseChunks(buffer);
          buffer = rest;
          for (const ev of events) this.handlers.onEvent(ev);
        }
      } catch {
        // fall through to retry
      }
      if (this.stopped) return;
      this.attempt += 1;
      const delay = Math.min(this.retryDelayMs * 2 ** Math.min(this.attempt - 1, 5), 5000);
      await new Promise((r) => setTimeout(r, delay));
    }
  }
}
