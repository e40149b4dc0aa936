import numpy as np

import detmmot
from detmmot._lp import discretize_radial_instance, solve_primal
from detmmot._optcheck import check_gradient_system_3d, check_tightness
from detmmot._radial import sample_coupling, solve_radial


class RadialSuite:
    params = [2, 3, 5]
    param_names = ["dim"]
    # Run each benchmark at least 5 times to get a good average
    min_run_count = 5

    def setup(self, dim):
        self.marginals = [detmmot.RadialMeasure.uniform_ball(dim)] * dim
        self.solution = solve_radial(self.marginals)
        self.sampler = detmmot.CouplingSampler(self.solution)
        self.tuples = sample_coupling(self.sampler, 20_000, 0)
        self.json_data = self.solution.to_json_data()

    def teardown(self, dim):
        del self.marginals, self.solution, self.sampler, self.tuples, self.json_data

    def time_solve_radial(self, dim):
        solve_radial(self.marginals)

    def time_sample_coupling(self, dim):
        sample_coupling(self.sampler, 100_000, 1)

    def time_check_tightness(self, dim):
        check_tightness(self.tuples, self.solution)

    def time_to_json_data(self, dim):
        self.solution.to_json_data()

    def time_from_json_data(self, dim):
        detmmot.RadialSolution.from_json_data(self.json_data)


class GradientSuite:
    min_run_count = 5

    def setup(self):
        self.solution = solve_radial([detmmot.RadialMeasure.uniform_ball(3)] * 3)
        self.tuples = sample_coupling(detmmot.CouplingSampler(self.solution), 20_000, 0)

    def time_check_gradient_system_3d(self):
        check_gradient_system_3d(self.tuples, self.solution)


class LPSuite:
    params = [(2, 4), (3, 4), (4, 6)]
    param_names = ["shape"]

    def setup(self, shape):
        n_radii, n_dirs = shape
        ball = detmmot.RadialMeasure.uniform_ball(3)
        self.marginals = discretize_radial_instance([ball] * 3, n_radii, n_dirs, 0)
        rng = np.random.default_rng(0)
        self.gaussian = [
            detmmot.DiscreteMeasure.uniform(rng.standard_normal((n_radii * n_dirs, 3)))
            for _ in range(3)
        ]

    def time_solve_design(self, shape):
        solve_primal(self.marginals)

    def time_solve_gaussian(self, shape):
        solve_primal(self.gaussian)


if __name__ == "__main__":
    print("Benchmarking...")
    s = RadialSuite()
    s.setup(3)
    s.time_sample_coupling(3)
