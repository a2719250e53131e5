#pragma once

#include "toniq/backend.hpp"
#include "toniq/builtin.hpp"
#include "toniq/errors.hpp"
#include "toniq/fleet.hpp"
#include "toniq/instances.hpp"
#include "toniq/nelder_mead.hpp"
#include "toniq/qaoa.hpp"
#include "toniq/qubo.hpp"
#include "toniq/random.hpp"
#include "toniq/report.hpp"
#include "toniq/scoring.hpp"
#include "toniq/serialize.hpp"
#include "toniq/simcore.hpp"
