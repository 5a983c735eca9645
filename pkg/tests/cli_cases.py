"""Small configurations of every CLI experiment, cheap enough to run several times."""

SMALL_RUNS = {
    "beta": ["--space", "lp:n=2:p=inf", "--measure", "uniform-cube", "--samples", "2e4"],
    "k-number": ["--space", "lp:n=16:p=1", "--samples", "5000"],
    "theta": ["--space", "lp:n=8:p=inf", "--samples", "1e5"],
    "moments": ["--space", "lp:n=8:p=1", "--samples", "5000"],
    "body-moment": ["--space", "lp:n=8:p=1", "--samples", "5000"],
    "vrad": ["--space", "lp:n=2:p=1", "--q", "1"],
    "net": ["--k", "2", "--eps", "0.5", "--probes", "5000"],
    "dvoretzky": ["--space", "lp:n=64:p=inf", "--eps", "0.3", "--trials", "3", "--samples", "5000",
                  "--probes", "2000"],
    "spherical": ["--space", "lp:n=16:p=1", "--k", "2", "--trials", "50"],
    "k-eps": ["--space", "lp:n=16:p=inf", "--eps", "0.5", "--trials", "50"],
    "grassmann": ["--space", "lp:n=16:p=1", "--mode", "section", "--k", "2", "--trials", "100", "--samples", "500"],
    "sandwich": ["--space", "lp:n=8:p=1", "--k", "2", "--samples", "5000"],
    "width-variance": ["--space", "lp:n=8:p=1", "--k", "2", "--samples", "500"],
    "lipschitz": ["--space", "lp:n=8:p=1", "--k", "2", "--trials", "10", "--samples", "500"],
    "sphere-identity": ["--n", "8", "--dot", "0.6", "--samples", "2e4"],
    "inclusion": ["--space", "lp:n=16:p=1", "--eps", "0.3", "--trials", "5"],
    "deviation": ["--space", "lp:n=8:p=1", "--measure", "gaussian", "--samples", "1e5"],
    "smallball": ["--space", "lp:n=8:p=inf", "--measure", "exponential", "--samples", "1e5"],
    "exp-profile": ["--p", "1", "--n-list", "16,64", "--samples", "5000"],
}
