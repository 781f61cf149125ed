#pragma once

// Everything except the command line (qdt/cli.hpp, which also needs
// OpenSSL).

#include "qdt/error.hpp"
#include "qdt/hermitian.hpp"
#include "qdt/random.hpp"
#include "qdt/sdp.hpp"
#include "qdt/cone.hpp"
#include "qdt/state.hpp"
#include "qdt/lottery.hpp"
#include "qdt/desirability.hpp"
#include "qdt/preference.hpp"
#include "qdt/updating.hpp"
#include "qdt/io.hpp"
#include "qdt/properties.hpp"
