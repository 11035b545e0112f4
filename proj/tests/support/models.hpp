#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <memory>
#include <random>
#include <string_view>

#include "bdn/evaluation.hpp"
#include "bdn/network.hpp"

namespace bdn::testing {

std::filesystem::path fixture_path(std::string_view id);
std::shared_ptr<const NetworkModel> fixture(std::string_view id);
inline constexpr std::string_view kFixtures[] = {"toy-angina", "toy-angina-voi", "two-stage", "elderly-patient"};

struct RandomModelOptions {
  bool share_parameters = false;  // reuse one parameter in several cells
  bool questions = true;
  bool second_decision = true;
  int max_chance = 4;
};

/// A small valid model: one or two decisions, up to `max_chance` chance nodes
/// with two or three outcomes, random row and utility distributions, and
/// optionally questions refining a few parameters.
NetworkModel random_model(std::mt19937_64& rng, const RandomModelOptions& options = {});

/// EU per first-decision alternative by enumerating every policy of the later
/// decisions and, for each, summing over the full joint of all chance nodes.
Eigen::VectorXd oracle_eu(const NetworkModel& model, const Instantiation& inst);

}  // namespace bdn::testing
