import { WireMessage, decodeFrame } from "../src/protocol.js";
import {
  ConsoleViewModel,
  applyMessage,
  initialViewModel,
} from "../src/viewmodel.js";

export const scene = {
  lanelets: [
    {
      id: 1,
      left: [
        [0, 2],
        [20, 2],
      ],
      right: [
        [0, -2],
        [20, -2],
      ],
      odd_tags: ["regular_road"],
      blocked: false,
    },
    {
      id: 2,
      left: [
        [20, 2],
        [40, 2],
      ],
      right: [
        [20, -2],
        [40, -2],
      ],
      odd_tags: ["regular_road"],
      blocked: true,
    },
    {
      id: 4,
      left: [
        [20, 8],
        [40, 8],
      ],
      right: [
        [20, 4],
        [40, 4],
      ],
      odd_tags: ["parking_area"],
      blocked: false,
    },
  ],
  occupied_cells: [
    [30, 0],
    [30.25, 0],
  ],
  cell_size: 0.25,
  vehicle_pose: [5, 0, 0],
  goal_lanelet: 3,
};

export const candidates = [
  {
    id: 0,
    polyline: [
      [5, 0, 0],
      [25, 6, 0],
      [45, 0, 0],
    ],
    odd_modifications: ["parking_area"],
    cost_score: 44.257,
    preferred: true,
  },
  {
    id: 1,
    polyline: [
      [5, 0, 0],
      [25, -6, 0],
      [45, 0, 0],
    ],
    odd_modifications: ["sidewalk", "solid_line_crossing"],
    cost_score: 44.34,
    preferred: false,
  },
];

export function requestFrame(sessionId = "s1", seq = 1): string {
  return JSON.stringify({
    type: "assistance_request",
    session_id: sessionId,
    seq,
    payload: { candidates, scene, timeout_s: 120 },
  });
}

export function requestMessage(): WireMessage {
  return decodeFrame(requestFrame());
}

/** A console that has received hello + the two-candidate request. */
export function openConsole(): ConsoleViewModel {
  let view = initialViewModel("s1");
  view = applyMessage(
    view,
    decodeFrame(
      JSON.stringify({
        type: "hello",
        session_id: "s1",
        seq: 0,
        payload: { protocol: 1, heartbeat_interval_s: 5 },
      }),
    ),
  );
  return applyMessage(view, requestMessage());
}
