#pragma once

#include "lbo/error.hpp"
#include "lbo/truncated_vector.hpp"
#include "lbo/spaces.hpp"
#include "lbo/operators.hpp"
#include "lbo/densities.hpp"
#include "lbo/recurrence.hpp"
#include "lbo/constructions.hpp"
#include "lbo/measures.hpp"
#include "lbo/io.hpp"
#include "lbo/config.hpp"
#include "lbo/runner.hpp"
