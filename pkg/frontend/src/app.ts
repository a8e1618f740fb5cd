import { ApiClient, ApiError } from "./api.js";
import { appendEvent, el } from "./cards.js";
import {
  renderClockGauge,
  renderStatePanel,
  renderStatusBanner,
} from "./panel.js";
import { SAMPLE_TRANSCRIPT } from "./sample.js";
import type {
  CatalogDoc,
  CharacterPick,
  SceneListEntry,
  SessionHandle,
  TurnCompleteDoc,
} from "./types.js";

interface PlayElements {
  timeline: HTMLElement;
  statePanel: HTMLElement;
  gauge: HTMLElement;
  banner: HTMLElement;
  retry: HTMLElement;
  input: HTMLInputElement;
  send: HTMLButtonElement;
}

function labeled(
  label: string,
  field: HTMLElement,
  path: string,
): HTMLElement {
  const wrap = el("label", "field");
  wrap.dataset.path = path;
  wrap.append(el("span", "field-label", label), field);
  return wrap;
}

function select(name: string, options: string[]): HTMLSelectElement {
  const box = el("select");
  box.name = name;
  for (const option of options) {
    const entry = el("option", undefined, option);
    entry.value = option;
    box.append(entry);
  }
  return box;
}

export class App {
  private readonly root: HTMLElement;
  private readonly api: ApiClient;
  private handle: SessionHandle | null = null;
  private playerName = "";
  private ended = false;
  private play: PlayElements | null = null;

  constructor(root: HTMLElement, api: ApiClient) {
    this.root = root;
    this.api = api;
  }

  async start(): Promise<void> {
    const [scenes, catalog] = await Promise.all([
      this.api.listScenes(),
      this.api.getCatalog(),
    ]);
    this.renderCreation(scenes, catalog);
  }

  // -- character creation ---------------------------------------------------

  private renderCreation(scenes: SceneListEntry[], catalog: CatalogDoc): void {
    this.root.replaceChildren();
    const form = el("form", "creation");
    form.append(el("h2", undefined, "Enter the labyrinth"));

    const name = el("input");
    name.name = "name";
    name.required = true;
    const goal = el("input");
    goal.name = "goal";
    goal.required = true;
    const kin = select("kin", Object.keys(catalog.kins));
    const trait = select("trait", Object.keys(catalog.traits));
    const flaw = select("flaw", Object.keys(catalog.flaws));
    const scene = select("scene", scenes.map((s) => s.id));

    form.append(
      labeled("Name", name, "players[0]"),
      labeled("Goal", goal, "players[0]"),
      labeled("Kin", kin, "players[0]"),
      labeled("Trait", trait, "players[0]"),
      labeled("Flaw", flaw, "players[0]"),
      labeled("Scene", scene, "scene"),
    );

    const begin = el("button", "begin", "Begin");
    begin.type = "submit";
    const sample = el("button", "sample-replay", "Watch a sample turn");
    sample.type = "button";
    sample.addEventListener("click", () => this.renderSample());
    form.append(begin, sample);

    form.addEventListener("submit", (raised) => {
      raised.preventDefault();
      const pick: CharacterPick = {
        name: name.value.trim(),
        kin: kin.value,
        goal: goal.value.trim(),
        trait: trait.value,
        flaw: flaw.value,
      };
      void this.createSession(form, scene.value, pick);
    });
    this.root.append(form);
  }

  private async createSession(
    form: HTMLFormElement,
    sceneId: string,
    pick: CharacterPick,
  ): Promise<void> {
    for (const stale of Array.from(form.querySelectorAll(".field-error"))) {
      stale.remove();
    }
    try {
      this.handle = await this.api.createSession(sceneId, [pick]);
    } catch (raised) {
      if (raised instanceof ApiError && raised.issues.length > 0) {
        this.showFieldIssues(form, raised.issues);
      } else {
        form.append(
          el("p", "field-error form-level", (raised as Error).message),
        );
      }
      return;
    }
    this.playerName = pick.name;
    this.renderPlay();
    await this.refreshState();
  }

  /** 422 issues land inline, under the field whose path prefix matches. */
  private showFieldIssues(
    form: HTMLFormElement,
    issues: { path: string; message: string }[],
  ): void {
    for (const issue of issues) {
      const note = el("p", "field-error", issue.message);
      note.dataset.path = issue.path;
      let target: Element | null = null;
      for (const field of Array.from(form.querySelectorAll(".field"))) {
        const path = (field as HTMLElement).dataset.path ?? "";
        if (path && issue.path.startsWith(path)) {
          target = field;
        }
      }
      if (target) {
        target.append(note);
      } else {
        form.append(note);
      }
    }
  }

  // -- play screen ----------------------------------------------------------

  private renderPlay(): void {
    this.root.replaceChildren();
    const page = el("div", "play");

    const header = el("header", "play-header");
    const banner = el("div", "banner-slot");
    const gauge = el("div", "gauge-slot");
    header.append(banner, gauge);

    const timeline = el("div", "timeline");
    const statePanel = el("aside", "state-slot");

    const retry = el("div", "retry-banner");
    retry.hidden = true;

    const composer = el("form", "composer");
    const input = el("input");
    input.name = "message";
    input.placeholder = `Speak as ${this.playerName}`;
    const send = el("button", undefined, "Send");
    send.type = "submit";
    composer.append(input, send);
    composer.addEventListener("submit", (raised) => {
      raised.preventDefault();
      const text = input.value.trim();
      if (text) {
        input.value = "";
        void this.send(text);
      }
    });

    page.append(header, retry, timeline, statePanel, composer);
    this.root.append(page);
    this.play = { timeline, statePanel, gauge, banner, retry, input, send };
  }

  private setBusy(busy: boolean): void {
    if (!this.play) {
      return;
    }
    this.play.input.disabled = busy || this.ended;
    this.play.send.disabled = busy || this.ended;
  }

  private showRetry(message: string, repeat: (() => void) | null): void {
    if (!this.play) {
      return;
    }
    const { retry } = this.play;
    retry.replaceChildren(el("span", "retry-message", message));
    if (repeat) {
      const again = el("button", "retry-button", "Retry");
      again.type = "button";
      again.addEventListener("click", () => {
        retry.hidden = true;
        repeat();
      });
      retry.append(again);
    }
    retry.hidden = false;
  }

  private applySummary(summary: TurnCompleteDoc): void {
    if (!this.play) {
      return;
    }
    this.play.gauge.replaceChildren(
      renderClockGauge(summary.clock_hours, summary.clock_limit),
    );
    this.play.banner.replaceChildren(renderStatusBanner(summary.status));
    if (summary.status !== "running") {
      this.ended = true;
    }
  }

  async send(text: string): Promise<void> {
    const play = this.play;
    const handle = this.handle;
    if (!play || !handle || this.ended) {
      return;
    }
    play.retry.hidden = true;
    this.setBusy(true);
    try {
      await this.api.sendMessage(handle.session_id, this.playerName, text, {
        onEvent: (event) => {
          appendEvent(play.timeline, event);
          play.timeline.scrollTop = play.timeline.scrollHeight;
        },
        onServerError: (message) => this.showRetry(message, null),
        onTurnComplete: (summary) => this.applySummary(summary),
      });
    } catch (raised) {
      if (raised instanceof ApiError && raised.status === 409) {
        this.ended = true;
        this.showRetry(raised.message, null);
      } else {
        // transport failure: offer to resend the same message
        this.showRetry((raised as Error).message, () => void this.send(text));
      }
      this.setBusy(false);
      return;
    }
    // the turn is over; the panel must reflect the server's latest state
    await this.refreshState();
    this.setBusy(false);
  }

  async refreshState(): Promise<void> {
    const play = this.play;
    const handle = this.handle;
    if (!play || !handle) {
      return;
    }
    const state = await this.api.getState(handle.session_id);
    play.statePanel.replaceChildren(renderStatePanel(state));
    play.gauge.replaceChildren(
      renderClockGauge(state.clock_hours, state.clock_limit),
    );
    play.banner.replaceChildren(renderStatusBanner(state.status));
    if (state.status !== "running") {
      this.ended = true;
      this.setBusy(false);
    }
  }

  // -- canned demo ----------------------------------------------------------

  private renderSample(): void {
    this.root.replaceChildren();
    const page = el("div", "play sample");
    page.append(el("h2", undefined, "A sample turn"));
    const timeline = el("div", "timeline");
    for (const event of SAMPLE_TRANSCRIPT) {
      appendEvent(timeline, event);
    }
    page.append(timeline);
    const back = el("button", "back", "Back");
    back.type = "button";
    back.addEventListener("click", () => void this.start());
    page.append(back);
    this.root.append(page);
  }
}
