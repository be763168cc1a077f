#pragma once

// Everything except the command-line front end (algver/cli.hpp).

#include "algver/bench.hpp"
#include "algver/critical_system.hpp"
#include "algver/ed_analysis.hpp"
#include "algver/error.hpp"
#include "algver/homotopy.hpp"
#include "algver/kac_rice.hpp"
#include "algver/network.hpp"
#include "algver/network_io.hpp"
#include "algver/polynomial.hpp"
#include "algver/quadric.hpp"
#include "algver/random.hpp"
#include "algver/verifier.hpp"
