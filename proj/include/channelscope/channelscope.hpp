#pragma once

#include "channelscope/canon.hpp"
#include "channelscope/certify.hpp"
#include "channelscope/config.hpp"
#include "channelscope/curves.hpp"
#include "channelscope/ensembles.hpp"
#include "channelscope/errors.hpp"
#include "channelscope/linalg.hpp"
#include "channelscope/model.hpp"
#include "channelscope/parallel.hpp"
#include "channelscope/quadrature.hpp"
#include "channelscope/repr.hpp"
#include "channelscope/witness.hpp"
#include "channelscope/zoo.hpp"
