import { el } from "./cards.js";
import type { PlayerDoc, SceneDoc, SessionState } from "./types.js";

function definitionList(entries: Record<string, string>): HTMLElement {
  const list = el("dl", "pairs");
  for (const [name, description] of Object.entries(entries)) {
    list.append(el("dt", undefined, name), el("dd", undefined, description));
  }
  return list;
}

function section(title: string, ...children: (HTMLElement | null)[]): HTMLElement {
  const box = el("section", "panel-section");
  box.append(el("h3", undefined, title));
  for (const child of children) {
    if (child) {
      box.append(child);
    }
  }
  return box;
}

function sceneSection(scene: SceneDoc): HTMLElement {
  const box = section(
    scene.scene,
    el("p", "chapter", scene.chapter),
  );
  if (scene.is_action_scene) {
    box.append(el("span", "badge action-scene", "Action scene"));
  }
  const summary = el("ul", "scene-summary");
  for (const line of scene.scene_summary) {
    summary.append(el("li", undefined, line));
  }
  box.append(summary);
  if (Object.keys(scene.environment).length > 0) {
    box.append(el("h4", undefined, "Environment"), definitionList(scene.environment));
  }
  const npcNames = Object.keys(scene.npcs);
  if (npcNames.length > 0) {
    const npcs = el("dl", "pairs npcs");
    for (const name of npcNames) {
      const spec = scene.npcs[name];
      if (spec) {
        npcs.append(
          el("dt", undefined, `${name} (${spec.kin})`),
          el("dd", undefined, spec.persona),
        );
      }
    }
    box.append(el("h4", undefined, "NPCs"), npcs);
  }
  return box;
}

function playerSection(player: PlayerDoc): HTMLElement {
  return section(
    `${player.name} (${player.kin})`,
    el("p", "goal", player.goal),
    el("h4", undefined, "Traits"),
    definitionList(player.traits),
    el("h4", undefined, "Flaws"),
    definitionList(player.flaws),
    el("h4", undefined, "Inventory"),
    definitionList(player.inventory),
  );
}

/**
 * Read-only inspector for the server's current state. Always built from a
 * fresh GET /state document; the page never edits game state locally.
 */
export function renderStatePanel(state: SessionState): HTMLElement {
  const panel = el("div", "state-panel");
  panel.append(sceneSection(state.scene));
  for (const player of state.players) {
    panel.append(playerSection(player));
  }
  return panel;
}

export function renderClockGauge(hours: number, limit: number): HTMLElement {
  const gauge = el("div", "clock-gauge");
  gauge.setAttribute("role", "meter");
  gauge.setAttribute("aria-valuenow", String(hours));
  gauge.setAttribute("aria-valuemax", String(limit));
  const fill = el("div", "clock-fill");
  fill.style.width = `${limit > 0 ? Math.min(100, (hours / limit) * 100) : 0}%`;
  gauge.append(fill, el("span", "clock-label", `Hour ${hours} of ${limit}`));
  return gauge;
}

export function renderStatusBanner(status: string): HTMLElement {
  const labels: Record<string, string> = {
    running: "The session is underway.",
    success: "Success: the party found the way onward.",
    failure: "Failure: the scene has closed against the party.",
    errored: "The session stopped after an internal error.",
  };
  return el("div", `status-banner ${status}`, labels[status] ?? status);
}
