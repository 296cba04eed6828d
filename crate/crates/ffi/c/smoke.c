#include <stdio.h>
#include "east_sim.h"

int main(void) {
    EastConfig *cfg = east_config_default();
    EastRun *run = NULL;
    if (east_config_set(cfg, "rounds", "200") != EAST_STATUS_OK ||
        east_run(cfg, &run) != EAST_STATUS_OK) {
        fprintf(stderr, "east: %s\n", east_last_error_message());
        east_config_free(cfg);
        return 1;
    }
    printf("rounds %zu, control packets %llu, energy %.6f J, survivors %zu\n",
           east_run_rounds_executed(run),
           (unsigned long long)east_run_control_packets(run),
           east_run_energy_j(run), east_run_survivors(run));
    east_run_free(run);
    east_config_free(cfg);
    return 0;
}
