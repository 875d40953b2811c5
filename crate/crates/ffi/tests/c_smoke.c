#include <stdio.h>
#include <string.h>
#include "coin_sim.h"

int main(void) {
    uint32_t k = 0;
    if (coin_optimize_uniform(6000, 16.0, 0.25, 0.22, 4, 100, &k) != COIN_STATUS_OK || k != 16) {
        return 1;
    }
    if (coin_optimize_uniform(6000, 16.0, 1.5, 0.22, 4, 100, &k) != COIN_STATUS_INVALID_ARGUMENT &&
        coin_optimize_uniform(6000, 16.0, 1.5, 0.22, 4, 100, &k) != COIN_STATUS_INFEASIBLE) {
        return 2;
    }
    if (coin_last_error() == NULL) {
        return 3;
    }
    CoinGraph *g = NULL;
    if (coin_graph_preset("cora", 1, &g) != COIN_STATUS_OK) {
        return 4;
    }
    CoinArchitecture arch = {COIN_ARCH_KIND_COIN, 4, 4};
    CoinReport *r = NULL;
    if (coin_run(g, arch, NULL, &r) != COIN_STATUS_OK) {
        return 5;
    }
    CoinReportSummary s;
    coin_report_summary(r, &s);
    char *json = NULL;
    coin_report_to_json(r, &json);
    int ok = s.total_energy > 0.0 && strstr(json, "\"architecture\":\"coin-4x4\"") != NULL;
    printf("total %g J, share %.4f\n", s.total_energy, s.communication_share);
    coin_string_free(json);
    coin_report_free(r);
    coin_graph_free(g);
    return ok ? 0 : 6;
}
