#include <doctest.h>

#include <cmath>
#include <string>

#include "pdmp/pdmp.h"

TEST_CASE("C interface runs a config and exposes its rows") {
  pdmp_config* cfg = nullptr;
  REQUIRE(pdmp_config_parse("kind = simulate\nvariant = storage\nalpha = 1\nbeta = 1\nx0 = 0\ntimes = 1\n"
                            "samples = 4000\nseed = 5\n",
                            &cfg) == PDMP_OK);
  char kind[32];
  REQUIRE(pdmp_config_kind(cfg, kind, sizeof kind) == PDMP_OK);
  CHECK(std::string(kind) == "simulate");
  CHECK(pdmp_config_kind(cfg, kind, 3) == PDMP_INVALID_ARGUMENT);

  pdmp_report* report = nullptr;
  REQUIRE(pdmp_run(cfg, 2, &report) == PDMP_OK);
  const size_t n = pdmp_report_row_count(report);
  REQUIRE(n > 0);
  bool saw_checked = false;
  for (size_t k = 0; k < n; ++k) {
    pdmp_row row;
    REQUIRE(pdmp_report_row(report, k, &row) == PDMP_OK);
    CHECK(row.name != nullptr);
    if (!std::isnan(row.oracle)) {
      saw_checked = true;
      CHECK(row.verdict == PDMP_PASS);
      CHECK_FALSE(std::isnan(row.tolerance));
    }
  }
  CHECK(saw_checked);
  pdmp_row row;
  CHECK(pdmp_report_row(report, n, &row) == PDMP_INVALID_ARGUMENT);
  CHECK(pdmp_report_passed(report) == 1);
  CHECK(std::string(pdmp_report_json(report)).find("\"passed\": true") != std::string::npos);

  pdmp_report* reseeded = nullptr;
  REQUIRE(pdmp_config_set_seed(cfg, 6) == PDMP_OK);
  REQUIRE(pdmp_run(cfg, 1, &reseeded) == PDMP_OK);
  CHECK(std::string(pdmp_report_json(reseeded)) != pdmp_report_json(report));
  CHECK(std::string(pdmp_report_json(reseeded)).find("\"seed\": 6") != std::string::npos);

  pdmp_report_free(reseeded);
  pdmp_report_free(report);
  pdmp_config_free(cfg);
}

TEST_CASE("C interface reports errors through status codes") {
  pdmp_config* cfg = nullptr;
  CHECK(pdmp_config_parse("kind = simulate\nvariant = tcp\nlambda = 1\nhorizon = 1\nsamples = 3\n", &cfg) ==
        PDMP_PARSE_ERROR);
  CHECK(cfg == nullptr);
  CHECK(std::string(pdmp_last_error()).find("seed") != std::string::npos);
  CHECK(std::string(pdmp_status_name(PDMP_PARSE_ERROR)) == "parse error");
  CHECK(pdmp_config_load("/no/such/config.cfg", &cfg) == PDMP_IO_ERROR);
  CHECK(std::string(pdmp_last_error()).find("/no/such/config.cfg") != std::string::npos);
  CHECK(pdmp_config_parse(nullptr, &cfg) == PDMP_INVALID_ARGUMENT);
  CHECK(pdmp_run(nullptr, 1, nullptr) == PDMP_INVALID_ARGUMENT);
  double v = 0.0;
  CHECK(pdmp_storage_mean(1.0, 1.0, -1.0, 1.0, &v) == PDMP_DOMAIN_ERROR);
  pdmp_config_free(nullptr);
  pdmp_report_free(nullptr);
}

TEST_CASE("C interface oracles") {
  double v = 0.0;
  REQUIRE(pdmp_storage_mean(0.0, 1.0, 1.0, 1.0, &v) == PDMP_OK);
  CHECK(v == doctest::Approx(1.0 - std::exp(-1.0)));
  REQUIRE(pdmp_tcp_moment(2, 3.0, 1000.0, 1.0, &v) == PDMP_OK);
  CHECK(v == doctest::Approx(16.0 / 3.0));
  REQUIRE(pdmp_lyapunov_g(1.0, &v) == PDMP_OK);
  CHECK(v == doctest::Approx(0.1082587).epsilon(1e-6));
  REQUIRE(pdmp_stability_threshold(&v) == PDMP_OK);
  CHECK(std::abs(v - 0.3314) < 1e-3);
}
