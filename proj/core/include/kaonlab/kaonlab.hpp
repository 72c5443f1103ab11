#pragma once

#include <kaonlab/core.hpp>
#include <kaonlab/entangled.hpp>
#include <kaonlab/evolution.hpp>
#include <kaonlab/exp_series.hpp>
#include <kaonlab/inference.hpp>
#include <kaonlab/rng.hpp>
#include <kaonlab/sampler.hpp>
#include <kaonlab/single_models.hpp>
#include <kaonlab/spectral_zeno.hpp>
