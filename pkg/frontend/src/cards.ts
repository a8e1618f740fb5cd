import type {
  ChatEventDoc,
  DiffDoc,
  FieldChange,
  TestResultDoc,
} from "./types.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function speechCard(kind: "player" | "gm", speaker: string, content: string) {
  const card = el("div", `card speech ${kind}`);
  card.append(el("span", "speaker", speaker), el("p", "content", content));
  return card;
}

function formatArguments(args: Record<string, unknown>): string {
  return Object.entries(args)
    .map(([key, value]) => `${key}=${JSON.stringify(value)}`)
    .join(", ");
}

/** Collapsible trace card for a function call the GM made. */
function callCard(event: ChatEventDoc): HTMLElement {
  const call = event.call;
  const card = el("details", "card trace call");
  const summary = el("summary", "trace-summary");
  summary.append(
    el("span", "fn-name", call ? call.name : "unknown"),
    el("span", "fn-args", call ? `(${formatArguments(call.arguments)})` : ""),
  );
  card.append(summary);
  if (call) {
    const body = el("pre", "trace-body");
    body.textContent = JSON.stringify(call.arguments, null, 2);
    card.append(body);
  }
  return card;
}

export function diceCard(result: TestResultDoc): HTMLElement {
  const card = el("div", `card dice ${result.success ? "success" : "failure"}`);
  const rolls = el("div", "dice-rolls");
  for (const roll of result.rolls) {
    const die = el("span", "die", String(roll));
    if (roll === result.kept) {
      die.classList.add("kept");
    }
    rolls.append(die);
  }
  const label =
    result.modifier === "none" ? "" : ` with ${result.modifier}`;
  card.append(
    rolls,
    el("span", "dice-kept", `kept ${result.kept}`),
    el("span", "dice-difficulty", `vs difficulty ${result.difficulty}${label}`),
    el("span", "dice-outcome", result.success ? "Success" : "Failure"),
  );
  return card;
}

function changeLine(owner: string, change: FieldChange): HTMLElement {
  const [field = "", ...rest] = change.path.split(".");
  const name = rest.join(".");
  let verb = "changed";
  if (change.before === null) {
    verb = "gained";
  } else if (change.after === null) {
    verb = "lost";
  }
  return el("li", `change ${field} ${verb}`, `${owner} ${verb} ${field} ${name}`.trim());
}

/** Compact list of what a function's diff touched. */
export function diffSummary(diff: DiffDoc): HTMLElement | null {
  const lines: HTMLElement[] = [];
  for (const change of diff.scene_changes) {
    lines.push(changeLine("scene", change));
  }
  for (const [player, changes] of Object.entries(diff.player_changes)) {
    for (const change of changes) {
      lines.push(changeLine(player, change));
    }
  }
  if (lines.length === 0) {
    return null;
  }
  const list = el("ul", "diff-summary");
  list.append(...lines);
  return list;
}

/** Collapsible trace card for a function result; dice results get a dice card. */
function resultCard(event: ChatEventDoc): HTMLElement {
  const data = event.data ?? {};
  if (data.test_result) {
    return diceCard(data.test_result);
  }
  const card = el("details", "card trace result");
  if (data.rejected) {
    card.classList.add("rejected");
  }
  if (data.is_error) {
    card.classList.add("failed");
  }
  const summary = el("summary", "trace-summary");
  summary.append(el("span", "result-text", event.content));
  card.append(summary);
  const diff = data.diff ? diffSummary(data.diff) : null;
  if (diff) {
    card.append(diff);
    card.open = true; // state changes are worth seeing without a click
  }
  return card;
}

export function renderEvent(event: ChatEventDoc): HTMLElement {
  switch (event.kind) {
    case "player":
      return speechCard("player", event.speaker, event.content);
    case "gm":
      return speechCard("gm", event.speaker, event.content);
    case "function_call":
      return callCard(event);
    case "function_result":
      return resultCard(event);
    case "summary":
      return el("div", "card notice summary", event.content);
    case "system":
    default:
      return el("div", "card notice system", event.content);
  }
}

/** Timeline order equals server order: append only, never reorder. */
export function appendEvent(timeline: HTMLElement, event: ChatEventDoc): HTMLElement {
  const card = renderEvent(event);
  timeline.append(card);
  return card;
}
