// Wire types for the play server's HTTP API.

export type EventKind =
  | "player"
  | "gm"
  | "function_call"
  | "function_result"
  | "system"
  | "summary";

export interface FunctionCallDoc {
  name: string;
  arguments: Record<string, unknown>;
  call_id: string;
}

export interface TestResultDoc {
  rolls: number[];
  kept: number;
  difficulty: number;
  modifier: "none" | "advantage" | "disadvantage";
  success: boolean;
}

export interface FieldChange {
  path: string;
  before: string | null;
  after: string | null;
}

export interface DiffDoc {
  scene_changes: FieldChange[];
  player_changes: Record<string, FieldChange[]>;
}

export interface EventData {
  is_error?: boolean;
  rejected?: boolean;
  test_result?: TestResultDoc;
  diff?: DiffDoc;
  guard?: string;
  state_regen?: string;
}

export interface ChatEventDoc {
  kind: EventKind;
  speaker: string;
  content: string;
  timestamp: number;
  call?: FunctionCallDoc;
  call_id?: string;
  data?: EventData;
}

export interface TurnCompleteDoc {
  clock_hours: number;
  clock_limit: number;
  status: string;
  turns_completed: number;
}

export interface SessionHandle {
  session_id: string;
  created_at: string;
  profile: string;
  scene_id: string;
}

export interface SessionState {
  scene: SceneDoc;
  players: PlayerDoc[];
  clock_hours: number;
  clock_limit: number;
  status: string;
  turns_completed: number;
}

export interface NpcDoc {
  kin: string;
  persona: string;
  goal: string;
  trait: string;
  flaw: string;
}

export interface SceneDoc {
  chapter: string;
  scene: string;
  scene_summary: string[];
  npcs: Record<string, NpcDoc>;
  success_condition: string;
  failure_condition: string;
  consequences: string;
  game_flow: string[];
  environment: Record<string, string>;
  random_tables: Record<string, string[]>;
  is_action_scene: boolean;
}

export interface PlayerDoc {
  name: string;
  kin: string;
  goal: string;
  traits: Record<string, string>;
  flaws: Record<string, string>;
  inventory: Record<string, string>;
  additional_notes: string[];
}

export interface SceneListEntry {
  id: string;
  scene: string;
  chapter: string;
  description: string;
  random_tables: Record<string, string[]>;
}

export interface KinDoc {
  persona: string;
  default_traits: Record<string, string>;
  default_flaws: Record<string, string>;
  default_items: Record<string, string>;
}

export interface CatalogDoc {
  kins: Record<string, KinDoc>;
  traits: Record<string, string>;
  flaws: Record<string, string>;
}

export interface CharacterPick {
  name: string;
  kin: string;
  goal: string;
  trait: string;
  flaw: string;
}

export interface FieldIssue {
  path: string;
  message: string;
}
