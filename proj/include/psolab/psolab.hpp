#pragma once

// Everything in one include.

#include "psolab/agents/mlp.hpp"
#include "psolab/agents/pbt.hpp"
#include "psolab/agents/planner.hpp"
#include "psolab/cid.hpp"
#include "psolab/cid_json.hpp"
#include "psolab/envs/barging.hpp"
#include "psolab/envs/contentrec.hpp"
#include "psolab/envs/finite.hpp"
#include "psolab/envs/finite_scim.hpp"
#include "psolab/harness/barging_run.hpp"
#include "psolab/harness/cid_report.hpp"
#include "psolab/harness/config.hpp"
#include "psolab/harness/contentrec_run.hpp"
#include "psolab/harness/csv.hpp"
#include "psolab/noise.hpp"
#include "psolab/pso.hpp"
#include "psolab/scim.hpp"
