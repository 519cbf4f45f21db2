export {
  OP_RESET,
  OP_STEP,
  OP_OBS_SPEC,
  OP_CLOSE,
  STATUS_OK,
  STATUS_ERROR,
  FrameParser,
  frame,
  encodeReset,
  encodeStep,
  encodeObsSpec,
  encodeClose,
  decodeObservation,
} from "./protocol";
export type { ObsSpec, ObsField } from "./protocol";
export { EnvClient, EnvError } from "./client";
export type { StepResult } from "./client";
