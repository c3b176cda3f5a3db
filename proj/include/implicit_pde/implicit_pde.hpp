// SPDX-License-Identifier: MIT
#pragma once

#include <implicit_pde/errors.hpp>
#include <implicit_pde/eval.hpp>
#include <implicit_pde/expr.hpp>
#include <implicit_pde/families.hpp>
#include <implicit_pde/harness.hpp>
#include <implicit_pde/implicit_field.hpp>
#include <implicit_pde/jet.hpp>
#include <implicit_pde/linalg.hpp>
#include <implicit_pde/parse.hpp>
#include <implicit_pde/quad_ansatz.hpp>
#include <implicit_pde/random.hpp>
#include <implicit_pde/residuals.hpp>
#include <implicit_pde/scenario.hpp>
#include <implicit_pde/sym_diff.hpp>
#include <implicit_pde/version.hpp>
