from cluster_consensus.cli import run

if __name__ == "__main__":
    run()
