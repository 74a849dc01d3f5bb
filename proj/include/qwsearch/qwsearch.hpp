#pragma once

#include "qwsearch/ansatz.hpp"
#include "qwsearch/dynamics.hpp"
#include "qwsearch/errors.hpp"
#include "qwsearch/lattice.hpp"
#include "qwsearch/reduced_model.hpp"
#include "qwsearch/scaling.hpp"
#include "qwsearch/search.hpp"
#include "qwsearch/version.hpp"
