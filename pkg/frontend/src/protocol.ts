/**
 * Wire protocol schemas, mirrored from docs/protocol.md.
 *
 * Every frame the console sends or receives is validated here; a frame that
 * fails the schema never reaches the view model.
 */
import { z } from "zod";

export const MODIFICATION_KINDS = [
  "regular_road",
  "bus_driveway",
  "parking_area",
  "sidewalk",
  "off_road",
  "solid_line_crossing",
] as const;

export type ModificationKind = (typeof MODIFICATION_KINDS)[number];

const point = z.tuple([z.number(), z.number()]);
const pose = z.tuple([z.number(), z.number(), z.number()]);

export const laneletSchema = z.object({
  id: z.number().int(),
  left: z.array(point).min(2),
  right: z.array(point).min(2),
  odd_tags: z.array(z.enum(MODIFICATION_KINDS)),
  blocked: z.boolean(),
});

export const sceneSchema = z.object({
  lanelets: z.array(laneletSchema),
  occupied_cells: z.array(point),
  cell_size: z.number().positive(),
  vehicle_pose: pose,
  goal_lanelet: z.number().int(),
});

export const candidateSchema = z.object({
  id: z.number().int().nonnegative(),
  polyline: z.array(pose).min(2),
  odd_modifications: z.array(z.enum(MODIFICATION_KINDS)),
  cost_score: z.number(),
  preferred: z.boolean(),
});

const payloads = {
  hello: z.object({
    protocol: z.number().int(),
    heartbeat_interval_s: z.number().positive(),
  }),
  scene_snapshot: sceneSchema,
  assistance_request: z.object({
    candidates: z.array(candidateSchema).min(1),
    scene: sceneSchema,
    timeout_s: z.number().positive(),
  }),
  assistance_response: z.object({
    candidate_id: z.number().int().nonnegative(),
    approved_modifications: z.array(z.enum(MODIFICATION_KINDS)),
    operator_id: z.string().optional(),
  }),
  selection_preview: z.object({
    candidate_id: z.number().int().nonnegative(),
  }),
  state_update: z.object({
    state: z.string(),
    vehicle_mode: z.string(),
  }),
  error: z.object({
    reason: z.string(),
    detail: z.string().optional(),
  }),
  bye: z.object({
    reason: z.string().optional(),
  }),
};

export type MessageType = keyof typeof payloads;

const envelope = z.object({
  type: z.enum(Object.keys(payloads) as [MessageType, ...MessageType[]]),
  session_id: z.string(),
  seq: z.number().int().nonnegative(),
  payload: z.record(z.unknown()),
});

export interface WireMessage<T extends MessageType = MessageType> {
  type: T;
  session_id: string;
  seq: number;
  payload: z.infer<(typeof payloads)[T]>;
}

export type Candidate = z.infer<typeof candidateSchema>;
export type Scene = z.infer<typeof sceneSchema>;

/** Parse and validate one inbound frame; throws on anything off-schema. */
export function decodeFrame(raw: string): WireMessage {
  const outer = envelope.parse(JSON.parse(raw));
  const payload = payloads[outer.type].parse(outer.payload);
  return { ...outer, payload } as WireMessage;
}

/** Validate and serialize one outbound frame. */
export function encodeFrame(message: WireMessage): string {
  const checked = envelope.parse(message);
  payloads[message.type].parse(message.payload);
  return JSON.stringify(checked);
}

/** Gapless outgoing sequence numbers, one counter per connection. */
export class SequenceCounter {
  private next = 0;

  take(): number {
    return this.next++;
  }
}
