#pragma once

// Umbrella header: the whole simulator.

#include "addressing.hpp"       // IWYU pragma: export
#include "cost_model.hpp"       // IWYU pragma: export
#include "defense_forest.hpp"   // IWYU pragma: export
#include "defense_tree.hpp"     // IWYU pragma: export
#include "harness.hpp"          // IWYU pragma: export
#include "mmu.hpp"              // IWYU pragma: export
#include "os.hpp"               // IWYU pragma: export
#include "page_table.hpp"       // IWYU pragma: export
#include "sha256.hpp"           // IWYU pragma: export
#include "tlb.hpp"              // IWYU pragma: export
#include "workloads.hpp"        // IWYU pragma: export
